use mobo_core::mlp::{distill, insert_layer_identity, insert_positions, prune_units, softmax, Targets, TrainSpec};
use mobo_core::Net;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net(rng: &mut ChaCha8Rng) -> Net {
    let depth = rng.random_range(1..=3);
    let mut widths = vec![rng.random_range(2..=5)];
    for _ in 0..depth {
        widths.push(rng.random_range(2..=7));
    }
    widths.push(rng.random_range(2..=4));
    let mut net = Net::new(&widths, rng).unwrap();
    // Nonzero biases so every code path of the backward pass is exercised.
    for layer in net.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    net
}

fn inputs(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn check_gradient(net: &Net, xs: &[Vec<f64>], targets: Targets<'_, f64>) -> f64 {
    let (_, grads) = net.loss_and_gradient(xs, targets).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for l in 0..net.layers().len() {
        for i in 0..net.layers()[l].weights.len() + net.layers()[l].bias.len() {
            let nudge = |delta: f64| {
                let mut probe = net.clone();
                let layer = &mut probe.layers_mut()[l];
                let n_w = layer.weights.len();
                if i < n_w {
                    layer.weights[i] += delta;
                } else {
                    layer.bias[i - n_w] += delta;
                }
                probe.loss(xs, targets).unwrap()
            };
            let numeric = (nudge(h) - nudge(-h)) / (2.0 * h);
            let n_w = net.layers()[l].weights.len();
            let analytic = if i < n_w { grads.weights[l][i] } else { grads.bias[l][i - n_w] };
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let net = random_net(&mut rng);
        let xs = inputs(12, net.input_dim(), &mut rng);
        let k = net.output_dim();
        let classes: Vec<usize> = (0..xs.len()).map(|_| rng.random_range(0..k)).collect();
        let values: Vec<Vec<f64>> = (0..xs.len()).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect();
        let logits: Vec<Vec<f64>> = (0..xs.len()).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let probs: Vec<Vec<f64>> = logits.iter().map(|z| softmax(z, 1.0)).collect();
        for targets in [Targets::Classes(&classes), Targets::Values(&values), Targets::Soft { probs: &probs, temperature: 2.0 }] {
            let err = check_gradient(&net, &xs, targets);
            assert!(err < 1e-4, "relative gradient error {err}");
        }
    }
}

#[test]
fn identity_insertion_preserves_outputs_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let net = random_net(&mut rng);
        for pos in insert_positions(&net) {
            let grown = insert_layer_identity(&net, pos).unwrap();
            assert_eq!(grown.layers().len(), net.layers().len() + 1);
            for x in inputs(100, net.input_dim(), &mut rng) {
                let (a, b) = (net.forward(&x), grown.forward(&x));
                let dev = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                assert!(dev < 1e-12, "deviation {dev}");
            }
        }
    }
}

#[test]
fn pruned_parameter_count_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..30 {
        let net = random_net(&mut rng);
        let hidden = net.layers().len() - 1;
        let layer = rng.random_range(0..hidden);
        let keep = [0.5, 0.625, 0.75, 0.875][rng.random_range(0..4)];
        let Ok(pruned) = prune_units(&net, layer, keep) else { continue };
        let mut widths = vec![pruned.input_dim()];
        widths.extend(pruned.hidden_widths());
        widths.push(pruned.output_dim());
        let recount: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        assert_eq!(pruned.param_count(), recount);
        assert!(pruned.hidden_widths()[layer] < net.hidden_widths()[layer]);
    }
}

#[test]
fn distilled_pruned_student_tracks_its_teacher() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let xs = inputs(500, 2, &mut rng);
    // A trained teacher has a structured output distribution worth copying.
    let labels: Vec<usize> = xs.iter().map(|x| usize::from(x[0] > 0.0) + 2 * usize::from(x[1] > 0.0)).collect();
    let mut teacher = Net::new(&[2, 32, 32, 4], &mut rng).unwrap();
    teacher.train(&xs, Targets::Classes(&labels), &TrainSpec::new(1e-2, 32, 30), &mut rng).unwrap();
    let mut student = prune_units(&teacher, 0, 0.75).unwrap();
    student = prune_units(&student, 1, 0.75).unwrap();
    let before = student.mean_kl_from(&teacher, &xs, 1.0);
    distill(&mut student, &teacher, &xs, &TrainSpec::new(3e-3, 32, 100), 1.0, &mut rng).unwrap();
    let after = student.mean_kl_from(&teacher, &xs, 1.0);
    assert!(after < 0.1, "KL {after}");
    assert!(after <= before, "KL grew from {before} to {after}");
}
