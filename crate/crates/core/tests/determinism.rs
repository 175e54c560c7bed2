// Work is split so that no floating-point reduction crosses a worker boundary,
// so any thread count must give bit-identical output.

use piv_rpca::decompose::{pod_decompose, rpca_alm, PodConfig, RpcaConfig};
use piv_rpca::matcore::svd;
use piv_rpca::quality::evaluate_frames;
use piv_rpca::seqio::aggregate;
use piv_rpca::synth::{make_piv_sequence, make_planted, BackgroundSpec, Flow, PivSceneSpec, PlantedSpec};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn thread_count_does_not_change_results() {
    // large enough to cross the parallel cut-off
    let p = make_planted(&PlantedSpec {
        m: 2000,
        n: 24,
        rank: 2,
        sparse_fraction: 0.05,
        sparse_magnitude: 1.0,
        seed: 2,
    })
    .unwrap();
    let run = || {
        let f = svd(&p.d).unwrap();
        let r = rpca_alm(&p.d, &RpcaConfig::default()).unwrap();
        let q = pod_decompose(&p.d, &PodConfig::Rank(2)).unwrap();
        (bits(f.u.as_slice()), bits(&f.sigma), bits(r.low_rank.as_slice()), r.residual_trace, bits(q.background.as_slice()))
    };
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    assert_eq!(one, four);
}

#[test]
fn scene_rendering_and_scoring_are_thread_independent() {
    let spec = PivSceneSpec {
        width: 96,
        height: 96,
        n_frames: 6,
        particle_count: 60,
        particle_sigma: 1.0,
        particle_peak: 0.6,
        flow: Flow::Uniform { u: 0.7, v: -0.4 },
        background: BackgroundSpec { gradient: 0.3, reflections: vec![], modulation: 0.1, period: 6.0 },
        noise_sigma: 0.01,
        seed: 12,
    };
    let run = || {
        let s = make_piv_sequence(&spec).unwrap();
        let d = aggregate(&s.frames).unwrap().into_matrix();
        let q = evaluate_frames(s.background.frames(), s.frames.frames(), 1.0).unwrap();
        let scores: Vec<f64> = q.per_frame.iter().flat_map(|f| [f.mse, f.psnr, f.ssim]).collect();
        (bits(d.as_slice()), bits(&scores))
    };
    assert_eq!(in_pool(1, run), in_pool(3, run));
}

#[test]
fn backend_flag_matches_build() {
    assert_eq!(piv_rpca::par::is_parallel(), cfg!(feature = "parallel"));
}
