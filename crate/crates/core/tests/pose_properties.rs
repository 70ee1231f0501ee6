use proptest::prelude::*;
use sociopose_core::pose::{
    self, clip_social_pose_3d, extract_features, fuse_depth, project_2d, AgentFrame, FeatureOptions, JointMap,
    JointTrack, Vec3, JOINTS3D_LEN, SOCIAL2D_LEN, SOCIAL3D_LEN,
};
use sociopose_core::synth::{gen_clip, PlacementRange, Range1, SceneParams};

fn scene(seed: u64, noise: f64, frames: usize) -> SceneParams {
    let mut p = SceneParams { n_clips: 1, n_frames: frames, noise_sigma: noise, seed, ..SceneParams::default() };
    // overlapping x ranges so either agent can end up first
    let wide = PlacementRange { x: Range1::new(-1.5, 1.5), ..p.agents[0] };
    p.agents = [wide, wide];
    p
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fuse_depth_is_idempotent(t in vec3(), z in 0.01..50.0f64) {
        let once = fuse_depth(t, z).unwrap();
        prop_assert_eq!(fuse_depth(once, z).unwrap(), once);
    }

    #[test]
    fn rigid_translation_shifts_centers(seed in 0u64..1000, noise in 0.0..0.02f64, d in vec3()) {
        let clip = gen_clip(&scene(seed, noise, 3), 0).unwrap();
        let map = JointMap::default();
        for frame in &clip.track.frames {
            for agent in frame {
                let moved = AgentFrame {
                    translation: agent.translation + d,
                    bev_depth: agent.bev_depth + d.z.abs(),
                    ..*agent
                };
                let shift = Vec3::new(d.x, d.y, d.z.abs());
                let a = pose::frame_social_pose(agent, &map).unwrap();
                let b = pose::frame_social_pose(&moved, &map).unwrap();
                prop_assert!((b.position - a.position - shift).norm() < 1e-12);
                prop_assert!((b.direction - a.direction).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_directions_and_bounded_means(seed in 0u64..1000, noise in 0.0..0.05f64) {
        let clip = gen_clip(&scene(seed, noise, 6), 0).unwrap();
        let map = JointMap::default();
        for frame in &clip.track.frames {
            for agent in frame {
                let d = pose::frame_social_pose(agent, &map).unwrap().direction;
                prop_assert!((d.norm() - 1.0).abs() < 1e-12);
            }
        }
        let f = clip_social_pose_3d(&clip.track, &map).unwrap();
        for a in f.values.chunks_exact(6) {
            prop_assert!(Vec3::new(a[3], a[4], a[5]).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn agent_order_does_not_matter(seed in 0u64..1000, noise in 0.0..0.02f64) {
        let clip = gen_clip(&scene(seed, noise, 4), 0).unwrap();
        let swapped = JointTrack {
            clip_id: clip.track.clip_id.clone(),
            frames: clip.track.frames.iter().map(|[a, b]| [*b, *a]).collect(),
        };
        let map = JointMap::default();
        let x = extract_features(&clip.track, &map, &FeatureOptions::default()).unwrap();
        let y = extract_features(&swapped, &map, &FeatureOptions::default()).unwrap();
        prop_assert_eq!(&x.social3d, &y.social3d);
        prop_assert_eq!(&x.joints3d, &y.joints3d);
        prop_assert_eq!(x.swapped, !y.swapped);
    }

    #[test]
    fn projection_commutes_with_averaging(seed in 0u64..1000, noise in 0.0..0.02f64) {
        // separated x ranges keep the agent order fixed in every frame
        let params = SceneParams { n_clips: 1, n_frames: 5, noise_sigma: noise, seed, ..SceneParams::default() };
        let clip = gen_clip(&params, 0).unwrap();
        let map = JointMap::default();
        let whole = project_2d(&clip_social_pose_3d(&clip.track, &map).unwrap()).unwrap();
        let n = clip.track.frames.len() as f64;
        let mut acc = [0.0; SOCIAL2D_LEN];
        for frame in &clip.track.frames {
            let single = JointTrack { clip_id: "f".into(), frames: vec![*frame] };
            let f2 = project_2d(&clip_social_pose_3d(&single, &map).unwrap()).unwrap();
            for (a, v) in acc.iter_mut().zip(f2.values) {
                *a += v / n;
            }
        }
        for (a, b) in acc.iter().zip(&whole.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_lengths(seed in 0u64..1000, frames in 1usize..8) {
        let clip = gen_clip(&scene(seed, 0.01, frames), 0).unwrap();
        let f = extract_features(&clip.track, &JointMap::default(), &FeatureOptions::default()).unwrap();
        prop_assert_eq!(f.joints3d.values.len(), JOINTS3D_LEN);
        prop_assert_eq!(f.social3d.values.len(), SOCIAL3D_LEN);
        prop_assert_eq!(f.social2d.values.len(), SOCIAL2D_LEN);
    }
}
