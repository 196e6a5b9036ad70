//! Scene-level rendering checks: reflections, obstacles, diffuse
//! sources, binaural output, and scene files driving the engine.

use varen::engine::{
    render_offline, render_to_buffers, DiffuseDef, DiffuseInput, ObstacleDef, RangeBox,
    ReceiverDef, ReflectorDef, RenderJob, Scene, SceneParams, SourceDef, SourceInput,
};
use varen::geometry::{Euler, PlanarPolygon, PositionInterp, Trajectory, Vec3};
use varen::imagesource::Reflector;
use varen::receivers::{Dims, HrirSet, ReceiverFormat, SpeakerLayout};
use varen::scenedef;
use varen::transmission::{DelayInterp, Obstacle};
use varen::Sample;

fn rms(xs: &[Sample]) -> f64 {
    (xs.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn vmic_receiver(name: &str, position: Vec3) -> ReceiverDef {
    ReceiverDef {
        name: name.into(),
        trajectory: Trajectory::fixed(position, Euler::IDENTITY),
        format: ReceiverFormat::virtual_mic(0.0),
    }
}

/// Shoebox walls with inward normals, lower corner at the origin.
fn shoebox(width: f64, depth: f64, height: f64, reflectivity: f64) -> Vec<ReflectorDef> {
    let v = Vec3::new;
    let faces: Vec<(&str, Vec<Vec3>)> = vec![
        ("floor", vec![v(0., 0., 0.), v(width, 0., 0.), v(width, depth, 0.), v(0., depth, 0.)]),
        (
            "ceiling",
            vec![
                v(0., 0., height),
                v(0., depth, height),
                v(width, depth, height),
                v(width, 0., height),
            ],
        ),
        ("west", vec![v(0., 0., 0.), v(0., depth, 0.), v(0., depth, height), v(0., 0., height)]),
        (
            "east",
            vec![
                v(width, 0., 0.),
                v(width, 0., height),
                v(width, depth, height),
                v(width, depth, 0.),
            ],
        ),
        ("south", vec![v(0., 0., 0.), v(0., 0., height), v(width, 0., height), v(width, 0., 0.)]),
        (
            "north",
            vec![
                v(0., depth, 0.),
                v(width, depth, 0.),
                v(width, depth, height),
                v(0., depth, height),
            ],
        ),
    ];
    faces
        .into_iter()
        .map(|(name, verts)| ReflectorDef {
            name: name.into(),
            reflector: Reflector::new(PlanarPolygon::new(verts).unwrap(), reflectivity, 0.0),
        })
        .collect()
}

#[test]
fn shoebox_order1_equals_mirrored_primaries() {
    // A source in a perfectly reflective box, image order 1, versus the
    // same receiver hearing seven primaries: the original plus its six
    // wall mirrors. Nearest-neighbor delay mode; outputs must match
    // sample for sample, bit-exact.
    let params = SceneParams {
        block_len: 512,
        interp: DelayInterp::Nearest,
        image_order: 1,
        ..SceneParams::default()
    };
    let src_pos = Vec3::new(1.0, 1.5, 1.2);
    let rec = vmic_receiver("out", Vec3::new(2.5, 3.0, 1.5));
    let noise = |seed| SourceInput::Noise { seed, amplitude: 0.8 };

    let boxed = Scene {
        params: params.clone(),
        sources: vec![SourceDef::omni("src", Trajectory::fixed(src_pos, Euler::IDENTITY), noise(7))],
        reflectors: shoebox(4.0, 5.0, 3.0, 1.0),
        receivers: vec![rec.clone()],
        ..Scene::default()
    };

    // Mirror positions across the six wall planes, computed directly.
    let mirrors = [
        Vec3::new(src_pos.x, src_pos.y, -src_pos.z),        // floor z=0
        Vec3::new(src_pos.x, src_pos.y, 6.0 - src_pos.z),   // ceiling z=3
        Vec3::new(-src_pos.x, src_pos.y, src_pos.z),        // west x=0
        Vec3::new(8.0 - src_pos.x, src_pos.y, src_pos.z),   // east x=4
        Vec3::new(src_pos.x, -src_pos.y, src_pos.z),        // south y=0
        Vec3::new(src_pos.x, 10.0 - src_pos.y, src_pos.z),  // north y=5
    ];
    let mut sources =
        vec![SourceDef::omni("src", Trajectory::fixed(src_pos, Euler::IDENTITY), noise(7))];
    for (i, &m) in mirrors.iter().enumerate() {
        sources.push(SourceDef::omni(
            &format!("mirror{i}"),
            Trajectory::fixed(m, Euler::IDENTITY),
            noise(7),
        ));
    }
    let unrolled = Scene {
        params: SceneParams { image_order: 0, ..params },
        sources,
        receivers: vec![rec],
        ..Scene::default()
    };

    let (a, diag) = render_to_buffers(boxed, 1.0).unwrap();
    let (b, _) = render_to_buffers(unrolled, 1.0).unwrap();
    assert_eq!(diag.image_sources_per_source, 6);
    assert_eq!(a[0][0], b[0][0], "image-source render differs from mirrored primaries");
}

#[test]
fn reflection_raises_level_inside_a_box() {
    let params = SceneParams { block_len: 512, ..SceneParams::default() };
    let source = SourceDef::omni(
        "src",
        Trajectory::fixed(Vec3::new(1.0, 2.0, 1.5), Euler::IDENTITY),
        SourceInput::Noise { seed: 3, amplitude: 0.5 },
    );
    let rec = vmic_receiver("out", Vec3::new(3.0, 2.5, 1.5));
    let dry = Scene {
        params: params.clone(),
        sources: vec![source.clone()],
        receivers: vec![rec.clone()],
        ..Scene::default()
    };
    let reverberant = Scene {
        params,
        sources: vec![source],
        reflectors: shoebox(4.0, 5.0, 3.0, 0.9),
        receivers: vec![rec],
        ..Scene::default()
    };
    let (dry_out, _) = render_to_buffers(dry, 0.5).unwrap();
    let (wet_out, _) = render_to_buffers(reverberant, 0.5).unwrap();
    let skip = 11025;
    assert!(
        rms(&wet_out[0][0][skip..]) > rms(&dry_out[0][0][skip..]) * 1.2,
        "reflections should add energy"
    );
}

#[test]
fn obstacle_attenuates_when_blocking() {
    let params = SceneParams { block_len: 256, ..SceneParams::default() };
    let source = SourceDef::omni(
        "src",
        Trajectory::fixed(Vec3::new(4.0, 0.0, 1.0), Euler::IDENTITY),
        SourceInput::Noise { seed: 11, amplitude: 0.8 },
    );
    let rec = vmic_receiver("out", Vec3::new(0.0, 0.0, 1.0));
    // A wide screen between them, mostly opaque.
    let screen = ObstacleDef {
        name: "screen".into(),
        obstacle: Obstacle::new(
            PlanarPolygon::new(vec![
                Vec3::new(2.0, -2.0, 0.0),
                Vec3::new(2.0, 2.0, 0.0),
                Vec3::new(2.0, 2.0, 2.0),
                Vec3::new(2.0, -2.0, 2.0),
            ])
            .unwrap(),
            0.1,
        ),
    };
    let open = Scene {
        params: params.clone(),
        sources: vec![source.clone()],
        receivers: vec![rec.clone()],
        ..Scene::default()
    };
    let blocked = Scene {
        params,
        sources: vec![source],
        obstacles: vec![screen],
        receivers: vec![rec],
        ..Scene::default()
    };
    let (open_out, _) = render_to_buffers(open, 0.5).unwrap();
    let (blocked_out, _) = render_to_buffers(blocked, 0.5).unwrap();
    let skip = 4410;
    let open_rms = rms(&open_out[0][0][skip..]);
    let blocked_rms = rms(&blocked_out[0][0][skip..]);
    assert!(
        blocked_rms < open_rms * 0.7,
        "obstacle should attenuate: open {open_rms}, blocked {blocked_rms}"
    );
    // The diffracted path keeps low-frequency energy: not silent.
    assert!(blocked_rms > open_rms * 0.05);
}

#[test]
fn diffuse_range_box_gates_output() {
    let diffuse = DiffuseDef {
        name: "amb".into(),
        range: RangeBox {
            trajectory: Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY),
            dimensions: Vec3::new(4.0, 4.0, 4.0),
            ramp: 0.5,
        },
        gain: 1.0,
        input: DiffuseInput::Noise { seed: 21, amplitude: 0.5 },
    };
    let build = |rec_pos: Vec3| Scene {
        params: SceneParams { block_len: 256, ..SceneParams::default() },
        diffuse: vec![diffuse.clone()],
        receivers: vec![vmic_receiver("out", rec_pos)],
        ..Scene::default()
    };
    let (inside, _) = render_to_buffers(build(Vec3::ZERO), 0.25).unwrap();
    let (outside, _) = render_to_buffers(build(Vec3::new(10.0, 0.0, 0.0)), 0.25).unwrap();
    assert!(rms(&inside[0][0]) > 0.01);
    assert!(rms(&outside[0][0]) == 0.0, "outside the range box must be silent");
}

#[test]
fn diffuse_rotation_follows_receiver_yaw() {
    // An x-only FOA field on a 4-speaker ring: with an unrotated
    // receiver the front/back speakers carry the dipole; with the
    // receiver yawed +90 degrees the field rotates into the y axis and
    // the side speakers take over.
    let dir = tempfile::tempdir().unwrap();
    let tone: Vec<Sample> = (0..22050)
        .map(|i| (2.0 * std::f64::consts::PI * 220.0 * i as f64 / 44100.0).sin() as f32)
        .collect();
    let silence = vec![0.0; tone.len()];
    varen::wav::write_wav(
        &dir.path().join("foa.wav"),
        44100,
        &[silence.clone(), tone, silence.clone(), silence],
    )
    .unwrap();

    let build = |yaw: f64| Scene {
        params: SceneParams { block_len: 256, ..SceneParams::default() },
        diffuse: vec![DiffuseDef {
            name: "amb".into(),
            range: RangeBox {
                trajectory: Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY),
                dimensions: Vec3::new(10.0, 10.0, 10.0),
                ramp: 0.0,
            },
            gain: 1.0,
            input: DiffuseInput::File {
                path: dir.path().join("foa.wav"),
                looped: true,
                gain: 1.0,
            },
        }],
        receivers: vec![ReceiverDef {
            name: "out".into(),
            trajectory: Trajectory::fixed(Vec3::ZERO, Euler::new(yaw, 0.0, 0.0)),
            format: ReceiverFormat::nsp(SpeakerLayout::ring(4, 1.0)),
        }],
        ..Scene::default()
    };

    let (front, _) = render_to_buffers(build(0.0), 0.25).unwrap();
    let (yawed, _) = render_to_buffers(build(std::f64::consts::FRAC_PI_2), 0.25).unwrap();
    let energy = |out: &[Vec<Sample>], ch: usize| rms(&out[ch][256..]);
    // Unrotated: dipole on speakers 0 (front, +x) and 2 (back).
    assert!(energy(&front[0], 0) > 10.0 * energy(&front[0], 1));
    // Yawed +90: the dipole lands on the side speakers 1 and 3.
    assert!(energy(&yawed[0], 1) > 10.0 * energy(&yawed[0], 0));
    assert!((energy(&yawed[0], 1) - energy(&front[0], 0)).abs() < 1e-6);
}

#[test]
fn binaural_scene_renders_two_channels() {
    let dirs = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(-1.0, 0.0, 0.0),
        Vec3::new(0.0, -1.0, 0.0),
    ];
    // Synthetic HRIRs: left ear immediate, right ear delayed.
    let parts = dirs
        .iter()
        .map(|&d| {
            let mut left = vec![0.0; 8];
            let mut right = vec![0.0; 8];
            left[0] = 1.0;
            right[4] = 0.5;
            (d, left, right)
        })
        .collect();
    let hrirs = HrirSet::from_parts(parts).unwrap();
    let layout = SpeakerLayout::new(dirs.to_vec()).unwrap();
    let scene = Scene {
        params: SceneParams { block_len: 256, ..SceneParams::default() },
        sources: vec![SourceDef::omni(
            "src",
            Trajectory::fixed(Vec3::new(2.0, 0.5, 0.0), Euler::IDENTITY),
            SourceInput::Sine { frequency: 500.0, amplitude: 0.5 },
        )],
        receivers: vec![ReceiverDef {
            name: "ears".into(),
            trajectory: Trajectory::fixed(Vec3::ZERO, Euler::IDENTITY),
            format: ReceiverFormat::binaural(layout, hrirs).unwrap(),
        }],
        ..Scene::default()
    };
    let (out, _) = render_to_buffers(scene, 0.5).unwrap();
    assert_eq!(out[0].len(), 2);
    let left = rms(&out[0][0][11025..]);
    let right = rms(&out[0][1][11025..]);
    assert!(left > 0.0 && right > 0.0);
    // Right HRIR halves the amplitude.
    assert!((right / left - 0.5).abs() < 0.05, "left {left}, right {right}");
}

#[test]
fn moving_receiver_pans_between_speakers() {
    // Receiver yaws 180 degrees over two seconds; an NSP receiver hands
    // the source from the front speaker to the back one.
    let layout = SpeakerLayout::ring(4, 1.0);
    let scene = Scene {
        params: SceneParams { block_len: 256, ..SceneParams::default() },
        sources: vec![SourceDef::omni(
            "src",
            Trajectory::fixed(Vec3::new(3.0, 0.0, 0.0), Euler::IDENTITY),
            SourceInput::Noise { seed: 2, amplitude: 0.5 },
        )],
        receivers: vec![ReceiverDef {
            name: "out".into(),
            trajectory: Trajectory::new(
                vec![(0.0, Vec3::ZERO)],
                vec![
                    (0.0, Euler::IDENTITY),
                    (2.0, Euler::new(std::f64::consts::PI, 0.0, 0.0)),
                ],
                PositionInterp::Cartesian,
            )
            .unwrap(),
            format: ReceiverFormat::nsp(layout),
        }],
        ..Scene::default()
    };
    let (out, _) = render_to_buffers(scene, 2.0).unwrap();
    let early = &out[0][0][8820..17640]; // front speaker, first half
    let late = &out[0][2][70560..79380]; // back speaker, second half
    assert!(rms(early) > 0.01, "front speaker should carry the start");
    assert!(rms(late) > 0.01, "back speaker should carry the end");
    // And the reverse slots are quiet.
    assert!(rms(&out[0][2][8820..17640]) < 1e-6);
    assert!(rms(&out[0][0][70560..79380]) < 1e-6);
}

#[test]
fn render_offline_is_deterministic_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene_text = r#"<scene name="det" order="1">
  <source name="s">
    <position t="0" x="1" y="0.5" z="1"/>
    <noise seed="9" a="0.5"/>
  </source>
  <face name="wall" rho="0.8" delta="0.2">
    <vertex x="0" y="-1" z="0"/><vertex x="4" y="-1" z="0"/>
    <vertex x="4" y="-1" z="3"/><vertex x="0" y="-1" z="3"/>
  </face>
  <receiver name="out" format="nsp">
    <position t="0" x="3" y="0.5" z="1"/>
    <speaker az="0"/><speaker az="90"/><speaker az="180"/><speaker az="270"/>
  </receiver>
</scene>"#;
    let scene = scenedef::parse_scene(scene_text).unwrap();
    let job_a = RenderJob {
        scene: scene.clone(),
        duration: 0.5,
        out_path: dir.path().join("a.wav"),
    };
    let job_b = RenderJob { scene, duration: 0.5, out_path: dir.path().join("b.wav") };
    render_offline(&job_a).unwrap();
    render_offline(&job_b).unwrap();
    let a = std::fs::read(dir.path().join("a.wav")).unwrap();
    let b = std::fs::read(dir.path().join("b.wav")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two renders of the same job must be bit-identical");
}

#[test]
fn scene_file_with_wav_input_renders() {
    let dir = tempfile::tempdir().unwrap();
    let tone: Vec<Sample> =
        (0..4410).map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 44100.0).sin() as f32).collect();
    varen::wav::write_wav(&dir.path().join("tone.wav"), 44100, &[tone]).unwrap();
    let scene_text = r#"<scene>
  <source name="s">
    <position t="0" x="1" y="0" z="0"/>
    <sound file="tone.wav" loop="true" gain="0.5"/>
  </source>
  <receiver name="out" format="vmic"><position t="0" x="0" y="0" z="0"/></receiver>
</scene>"#;
    std::fs::write(dir.path().join("scene.xml"), scene_text).unwrap();
    let scene = scenedef::load_scene_file(&dir.path().join("scene.xml")).unwrap();
    let (out, _) = render_to_buffers(scene, 0.3).unwrap();
    assert!(rms(&out[0][0][4410..]) > 0.1);
}

#[test]
fn wav_input_with_wrong_rate_fails() {
    let dir = tempfile::tempdir().unwrap();
    varen::wav::write_wav(&dir.path().join("tone.wav"), 48000, &[vec![0.5; 100]]).unwrap();
    let scene_text = r#"<scene>
  <source name="s">
    <position t="0" x="1" y="0" z="0"/>
    <sound file="tone.wav"/>
  </source>
  <receiver name="out" format="vmic"><position t="0" x="0" y="0" z="0"/></receiver>
</scene>"#;
    std::fs::write(dir.path().join("scene.xml"), scene_text).unwrap();
    let scene = scenedef::load_scene_file(&dir.path().join("scene.xml")).unwrap();
    assert!(render_to_buffers(scene, 0.1).is_err());
}
