//! Synthetic throughput measurements. The workload depends only on
//! `--op`, `--n` and `--seed`; the checksum in the report lets two runs
//! confirm they measured the same thing.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrkit::frm::{reconstruct, BoxField, FeatureMap, FrmKernels};
use rrkit::geometry::{skew_iou_batch, RBox};
use rrkit::postproc::{rotated_nms_indices, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchOp {
    Iou,
    Nms,
    Frm,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub op: BenchOp,
    /// Box pairs for `iou`, detections for `nms`, feature cells for `frm`.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timed runs for `nms` and `frm`.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub op: BenchOp,
    pub n: usize,
    pub ops_per_s: f64,
    /// Per-operation latency percentiles in microseconds.
    pub p50_us: f64,
    pub p99_us: f64,
    pub checksum: f64,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = self.op.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        write!(
            f,
            "op={op} n={} ops_per_s={:.1} p50_us={:.3} p99_us={:.3} checksum={}",
            self.n, self.ops_per_s, self.p50_us, self.p99_us, self.checksum
        )
    }
}

fn random_box(r: &mut ChaCha8Rng, spread: f64) -> RBox {
    let long = r.gen_range(8.0..120.0);
    let ratio = r.gen_range(1.0..8.0);
    RBox::raw(r.gen_range(0.0..spread), r.gen_range(0.0..spread), long, long / ratio, r.gen_range(-FRAC_PI_2..0.0))
}

/// Mostly overlapping pairs, the expensive case for clipping.
pub fn iou_workload(n: usize, seed: u64) -> (Vec<RBox>, Vec<RBox>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = random_box(&mut r, 1000.0);
            let b = if r.gen_bool(0.8) {
                RBox { cx: a.cx + r.gen_range(-10.0..10.0), cy: a.cy + r.gen_range(-10.0..10.0), theta: a.theta + r.gen_range(-0.5..0.5), ..a }
                    .canonicalize()
            } else {
                random_box(&mut r, 1000.0)
            };
            (a, b)
        })
        .unzip()
}

/// Clusters of five jittered detections per object, as a dense head emits.
pub fn nms_workload(n: usize, seed: u64) -> Vec<Detection> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let spread = 40.0 * (n as f64).sqrt().max(1.0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let obj = random_box(&mut r, spread);
        let cls = r.gen_range(0..15);
        for _ in 0..5.min(n - out.len()) {
            let b = RBox { cx: obj.cx + r.gen_range(-3.0..3.0), cy: obj.cy + r.gen_range(-3.0..3.0), theta: obj.theta + r.gen_range(-0.08..0.08), ..obj };
            out.push(Detection::new(b.canonicalize(), cls, r.gen()));
        }
    }
    out
}

/// Square map with at least `n` cells, eight channels, stride 8.
pub fn frm_workload(n: usize, seed: u64) -> (FeatureMap, BoxField) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let side = (n as f64).sqrt().ceil() as usize;
    let (c, stride) = (8, 8u32);
    let data = (0..side * side * c).map(|_| r.gen_range(-1.0..1.0)).collect();
    let f = FeatureMap::from_vec(side, side, c, stride, data).expect("shape is consistent");
    let extent = (side * stride as usize) as f64;
    let boxes = (0..side * side).map(|_| random_box(&mut r, extent)).collect();
    let bf = BoxField::new(side, side, boxes, vec![1.0; side * side]).expect("one box per cell");
    (f, bf)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn run(a: &BenchArgs) -> Result<Report> {
    if a.n == 0 {
        bail!(rrkit::Error::InvalidArg("--n must be positive: nothing to measure".into()));
    }
    if a.repeats == 0 {
        bail!(rrkit::Error::InvalidArg("--repeats must be positive".into()));
    }
    // per-op latency samples in seconds
    let mut lat = Vec::new();
    let mut checksum = 0.0;
    let started;
    match a.op {
        BenchOp::Iou => {
            let (x, y) = iou_workload(a.n, a.seed);
            started = Instant::now();
            for (cx, cy) in x.chunks(1024).zip(y.chunks(1024)) {
                let t = Instant::now();
                let v = skew_iou_batch(cx, cy)?;
                lat.push(t.elapsed().as_secs_f64() / cx.len() as f64);
                checksum += v.iter().sum::<f64>();
            }
        }
        BenchOp::Nms => {
            let dets = nms_workload(a.n, a.seed);
            started = Instant::now();
            for _ in 0..a.repeats {
                let t = Instant::now();
                checksum = rotated_nms_indices(&dets, 0.1, true)?.len() as f64;
                lat.push(t.elapsed().as_secs_f64());
            }
        }
        BenchOp::Frm => {
            let (f, bf) = frm_workload(a.n, a.seed);
            let k = FrmKernels::identity(f.channels);
            started = Instant::now();
            for _ in 0..a.repeats {
                let t = Instant::now();
                checksum = reconstruct(&f, &bf, &k)?.data.iter().sum();
                lat.push(t.elapsed().as_secs_f64());
            }
        }
    }
    let total = started.elapsed().as_secs_f64();
    let ops = match a.op {
        BenchOp::Iou => a.n,
        _ => a.n * a.repeats,
    };
    lat.sort_by(f64::total_cmp);
    Ok(Report {
        op: a.op,
        n: a.n,
        ops_per_s: ops as f64 / total.max(1e-12),
        p50_us: percentile(&lat, 0.5) * 1e6,
        p99_us: percentile(&lat, 0.99) * 1e6,
        checksum,
    })
}
