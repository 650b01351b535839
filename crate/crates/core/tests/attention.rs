use proptest::prelude::*;

use wsense_core::attention::{SqueezeExcitation, WSense};
use wsense_core::nn::{Context, Mode, Module};
use wsense_core::{rng_from_seed, Tensor};

fn input(b: usize, t: usize, c: usize, seed: u64, scale: f64) -> Tensor {
    let mut s = seed | 1;
    let data = (0..b * t * c)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            scale * ((s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
        })
        .collect();
    Tensor::new(vec![b, t, c], data).unwrap()
}

fn block(c: usize, seed: u64) -> WSense {
    let mut w = WSense::new(c);
    w.init(&mut rng_from_seed(seed));
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_channel_vector(b in 1usize..4, t in 1usize..120, c in 1usize..12, seed in 0u64..500) {
        let w = block(c, seed);
        let mut rng = rng_from_seed(seed);
        let (out, _) = w.forward(&input(b, t, c, seed, 1.0), &mut Context::new(Mode::Infer, &mut rng)).unwrap();
        prop_assert_eq!(out.shape(), &[b, c]);
        prop_assert_eq!(w.output_shape(&[t, c]).unwrap(), vec![c]);
    }

    #[test]
    fn gates_are_open_interval_and_shrink(t in 5usize..80, c in 1usize..10, seed in 0u64..500, scale in 0.01f64..3.0) {
        let w = block(c, seed);
        let x = input(2, t, c, seed.wrapping_mul(31), scale);
        let mut rng = rng_from_seed(0);
        let mut ctx = Context::new(Mode::Infer, &mut rng);
        let gates = w.gates(&x, &mut ctx).unwrap();
        prop_assert!(gates.data().iter().all(|&g| g > 0.0 && g < 1.0));
        let (out, _) = w.forward(&x, &mut ctx).unwrap();
        // m itself, recomputed from the first convolution
        let (pre, _) = w.conv_a.forward(&x, &mut ctx).unwrap();
        for bi in 0..2 {
            for ch in 0..c {
                let m = (0..t)
                    .map(|ti| {
                        let v = pre.get(&[bi, ti, ch]);
                        if v > 0.0 { v } else { v.exp_m1() }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let o = out.get(&[bi, ch]);
                prop_assert!(o.abs() <= m.abs() + 1e-15);
                let g = gates.data()[bi * c + ch];
                prop_assert!((o - m * g).abs() < 1e-12);
            }
        }
    }

    /// Trailing zero rows leave the output unchanged whenever the extra
    /// convolution positions do not exceed the original per-channel maxima.
    #[test]
    fn zero_padding_is_invariant_when_max_is_kept(t in 5usize..60, pad in 1usize..20, c in 1usize..6, seed in 0u64..500) {
        let w = block(c, seed);
        let x = input(1, t, c, seed ^ 0xabc, 1.0);
        let mut padded = x.data().to_vec();
        padded.extend(std::iter::repeat(0.0).take(pad * c));
        let xp = Tensor::new(vec![1, t + pad, c], padded).unwrap();
        let mut rng = rng_from_seed(0);
        let mut ctx = Context::new(Mode::Infer, &mut rng);
        let (pre, _) = w.conv_a.forward(&xp, &mut ctx).unwrap();
        let keeps_max = (0..c).all(|ch| {
            let old = (0..t).map(|ti| pre.get(&[0, ti, ch])).fold(f64::NEG_INFINITY, f64::max);
            (t..t + pad).all(|ti| pre.get(&[0, ti, ch]) <= old)
        });
        let (a, _) = w.forward(&x, &mut ctx).unwrap();
        let (b, _) = w.forward(&xp, &mut ctx).unwrap();
        if keeps_max {
            prop_assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn se_rescales_each_channel_by_a_gate(t in 1usize..50, c in 1usize..4, seed in 0u64..500) {
        let c = 8 * c;
        let mut se = SqueezeExcitation::new(c, 8).unwrap();
        se.init(&mut rng_from_seed(seed));
        let x = input(2, t, c, seed, 2.0);
        let mut rng = rng_from_seed(0);
        let (out, _) = se.forward(&x, &mut Context::new(Mode::Infer, &mut rng)).unwrap();
        prop_assert_eq!(out.shape(), x.shape());
        for bi in 0..2 {
            for ch in 0..c {
                let mut scale = None;
                for ti in 0..t {
                    let (xi, oi) = (x.get(&[bi, ti, ch]), out.get(&[bi, ti, ch]));
                    if xi.abs() > 1e-6 {
                        let s = oi / xi;
                        prop_assert!(s > 0.0 && s < 1.0);
                        if let Some(prev) = scale {
                            prop_assert!((s - prev as f64).abs() < 1e-9);
                        }
                        scale = Some(s);
                    }
                }
            }
        }
        prop_assert_eq!(se.count_params().trainable, 2 * c * c / 8);
    }
}

#[test]
fn se_block_adds_4096_parameters_at_128_channels() {
    let se = SqueezeExcitation::new(128, 8).unwrap();
    assert_eq!(se.count_params().trainable, 4096);
    let w = WSense::new(128);
    assert_eq!(w.count_params().trainable, 5 * 128 * 128 + 128 + 128 * 128 + 128);
}
