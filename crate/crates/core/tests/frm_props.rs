mod common;

use common::{ref_reconstruct, RefMap};
use proptest::prelude::*;
use rrkit::frm::{reconstruct, reconstruct_with, BoxField, ConvKernel, FeatureMap, FrmKernels, Interpolation};
use rrkit::geometry::RBox;
use std::f64::consts::FRAC_PI_2;

fn kernels(c: usize, zero_bias: bool) -> impl Strategy<Value = FrmKernels> {
    let k = move |kh: usize, kw: usize| {
        (
            prop::collection::vec(-0.5..0.5f64, c * c * kh * kw),
            prop::collection::vec(-0.5..0.5f64, c),
        )
            .prop_map(move |(w, b)| {
                let b = if zero_bias { vec![0.0; c] } else { b };
                ConvKernel::new(kh, kw, c, c, w, b).unwrap()
            })
    };
    (k(1, 1), k(5, 1), k(1, 5)).prop_map(|(k1, k51, k15)| FrmKernels { k1, k51, k15 })
}

fn field(h: usize, w: usize, stride: u32) -> impl Strategy<Value = BoxField> {
    let extent = (w.max(h) as f64) * stride as f64;
    prop::collection::vec(
        (-0.2 * extent..1.2 * extent, -0.2 * extent..1.2 * extent, 0.0..60.0f64, 0.0..60.0f64, -FRAC_PI_2..0.0f64),
        h * w,
    )
    .prop_map(move |v| {
        let boxes: Vec<RBox> = v.into_iter().map(|(x, y, bw, bh, t)| RBox::raw(x, y, bw, bh, t)).collect();
        BoxField::new(h, w, boxes, vec![0.5; h * w]).unwrap()
    })
}

fn map(h: usize, w: usize, c: usize, stride: u32) -> impl Strategy<Value = FeatureMap> {
    prop::collection::vec(-2.0..2.0f64, h * w * c).prop_map(move |v| FeatureMap::from_vec(h, w, c, stride, v).unwrap())
}

fn to_ref(f: &FeatureMap) -> RefMap {
    RefMap { h: f.height, w: f.width, c: f.channels, v: f.data.clone() }
}

fn run_ref(f: &FeatureMap, bf: &BoxField, k: &FrmKernels) -> Vec<f64> {
    ref_reconstruct(
        &to_ref(f),
        f.stride as f64,
        &bf.boxes,
        (&k.k1.weights, &k.k1.bias),
        (&k.k51.weights, &k.k51.bias),
        (&k.k15.weights, &k.k15.bias),
    )
    .v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_naive_reference(
        (f, bf, k) in (1usize..7, 1usize..7, 1usize..4, prop_oneof![Just(4u32), Just(8), Just(16)])
            .prop_flat_map(|(h, w, c, s)| (map(h, w, c, s), field(h, w, s), kernels(c, false)))
    ) {
        let (g, stats) = reconstruct_with(&f, &bf, &k, Interpolation::Bilinear).unwrap();
        prop_assert_eq!(stats.samples, 5 * f.height * f.width);
        let r = run_ref(&f, &bf, &k);
        for (a, b) in g.data.iter().zip(&r) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_in_features(
        (f, g, bf, k) in (1usize..6, 1usize..6, 1usize..3)
            .prop_flat_map(|(h, w, c)| (map(h, w, c, 8), map(h, w, c, 8), field(h, w, 8), kernels(c, true))),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let mut mix = f.clone();
        for (m, (x, y)) in mix.data.iter_mut().zip(f.data.iter().zip(&g.data)) {
            *m = a * x + b * y;
        }
        let rf = reconstruct(&f, &bf, &k).unwrap();
        let rg = reconstruct(&g, &bf, &k).unwrap();
        let rm = reconstruct(&mix, &bf, &k).unwrap();
        for i in 0..rm.data.len() {
            prop_assert!((rm.data[i] - (a * rf.data[i] + b * rg.data[i])).abs() <= 1e-9);
        }
    }

    #[test]
    fn every_variant_sums_five_samples_per_cell(
        (f, bf) in (1usize..5, 1usize..5).prop_flat_map(|(h, w)| (map(h, w, 2, 8), field(h, w, 8)))
    ) {
        for v in Interpolation::ALL {
            let (out, stats) = reconstruct_with(&f, &bf, &FrmKernels::identity(2), v).unwrap();
            prop_assert_eq!(stats.samples, 5 * f.num_cells());
            prop_assert!(out.data.iter().all(|x| x.is_finite()));
            // each sample is a convex combination, so |out| <= 6 max|F|
            let m = f.data.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            prop_assert!(out.data.iter().all(|x| x.abs() <= 6.0 * m + 1e-12));
        }
    }
}

#[test]
fn tensor_file_roundtrip() {
    let f = FeatureMap::from_vec(3, 4, 2, 8, (0..24).map(|v| v as f64 * 0.25 - 3.0).collect()).unwrap();
    let mut buf = Vec::new();
    f.write_to(&mut buf).unwrap();
    assert_eq!(buf.len(), 16 + 24 * 4);
    assert_eq!(FeatureMap::read_from(&buf[..]).unwrap(), f);
    assert!(FeatureMap::read_from(&buf[..buf.len() - 1]).is_err());
}
