use sociopose_core::pose::{self, extract_features, FeatureOptions, JointMap};
use sociopose_core::ridge::{encode, Layer, RidgeConfig, TargetSplit};
use sociopose_core::synth::{forward, gen_scene, Range1, SceneParams};
use sociopose_core::Matrix;

#[test]
fn zero_noise_scenes_close_the_loop() {
    let params = SceneParams { n_clips: 25, n_frames: 3, seed: 12, ..SceneParams::default() };
    let map = JointMap::default();
    for clip in gen_scene(&params).unwrap() {
        for frame in &clip.track.frames {
            for (agent, placement) in frame.iter().zip(&clip.placements) {
                let sp = pose::frame_social_pose(agent, &map).unwrap();
                assert!((sp.position - placement.position).norm() < 1e-9);
                assert!((sp.direction - forward(placement.yaw)).norm() < 1e-9);
            }
        }
        let f = extract_features(&clip.track, &map, &FeatureOptions::default()).unwrap();
        assert!(!f.swapped);
        let v = &f.social3d.values;
        let c1 = clip.placements[1].position - clip.placements[0].position;
        let c1_feat = pose::Vec3::new(v[6] - v[0], v[7] - v[1], v[8] - v[2]);
        assert!((c1_feat.norm() - clip.targets.distance).abs() < 1e-9);
        assert!((c1_feat - c1).norm() < 1e-9);
    }
}

#[test]
fn depth_gap_is_visible_in_3d_but_not_2d() {
    let mut params = SceneParams { n_clips: 300, n_frames: 4, noise_sigma: 0.005, seed: 21, ..SceneParams::default() };
    params.agents[0].z = Range1::new(2.0, 4.0);
    params.agents[1].z = Range1::new(5.0, 8.0);
    let clips = gen_scene(&params).unwrap();
    let map = JointMap::default();
    let feats: Vec<_> = clips.iter().map(|c| extract_features(&c.track, &map, &FeatureOptions::default()).unwrap()).collect();
    let y = Matrix::from_fn(300, 1, |r, _| clips[r].targets.depth_gap);
    let tr: Vec<usize> = (0..150).collect();
    let te: Vec<usize> = (150..300).collect();
    let ids = |v: &[usize]| v.iter().map(|&i| clips[i].track.clip_id.clone()).collect();
    let split = TargetSplit::new(ids(&tr), ids(&te), y.select_rows(&tr), y.select_rows(&te), vec!["depth_gap".into()]).unwrap();
    let score = |rows: Vec<Vec<f64>>| {
        let x = Matrix::from_rows(&rows).unwrap();
        encode("f", &[Layer::new("x", x.select_rows(&tr))], &[x.select_rows(&te)], &split, &RidgeConfig::default()).unwrap()[0].r_test
    };
    let r3 = score(feats.iter().map(|f| f.social3d.values.clone()).collect());
    let r2 = score(feats.iter().map(|f| f.social2d.values.clone()).collect());
    assert!(r3 >= 0.95, "3D r = {r3}");
    assert!(r2.abs() <= 0.2, "2D r = {r2}");
}
