//! With the upper GRU layer made linear in its input, averaging train-mode
//! logits over many dropout masks must recover the eval-mode logits.

use thzris_core::seqmodel::{Example, Mode, ModelParams, ModelShape, PositionNormalizer, Task};
use thzris_core::Vec3;

#[test]
fn inverted_dropout_preserves_expectation() {
    let shape = ModelShape {
        vocab: 10,
        embed_dim: 6,
        hidden: 20,
        layers: 2,
        classes: 4,
        window: 1,
    };
    let mut m = ModelParams::init(shape, Task::Beam, 0.2, PositionNormalizer::IDENTITY, 3).unwrap();
    for g in shape.groups() {
        let w = &mut m.weights[g.offset..g.offset + g.len];
        match g.name.as_str() {
            // h' = n, with n = tanh(eps * W_n x) nearly linear
            "gru1.b_z" => w.fill(60.0),
            "gru1.w_n" => w.iter_mut().for_each(|v| *v *= 1e-2),
            "gru1.u_z" | "gru1.u_r" | "gru1.u_n" | "gru1.b_n" | "gru1.w_z" => w.fill(0.0),
            _ => {}
        }
    }
    let ex = Example {
        seq_id: 0,
        positions: vec![Vec3::new(0.3, -0.5, 0.8)],
        beams: vec![4],
        beam_label: 1,
        link_label: 0,
        target_position: Vec3::ZERO,
    };
    let head_b: Vec<f64> = {
        let g = shape.groups().into_iter().find(|g| g.name == "head.b").unwrap();
        m.weights[g.offset..g.offset + g.len].to_vec()
    };
    let eval = m.forward(&ex.positions, &ex.beams, Mode::Eval, 0).unwrap();
    let n = 10_000;
    let mut mean = vec![0.0; shape.classes];
    for s in 0..n {
        let out = m.forward(&ex.positions, &ex.beams, Mode::Train { seed: s }, 0).unwrap();
        for (a, b) in mean.iter_mut().zip(out) {
            *a += b / n as f64;
        }
    }
    // compare the input-dependent parts of the logits
    let mut diff = 0.0;
    let mut norm = 0.0;
    for c in 0..shape.classes {
        let e = eval[c] - head_b[c];
        let t = mean[c] - head_b[c];
        diff += (t - e).powi(2);
        norm += e * e;
    }
    let rel = (diff / norm).sqrt();
    assert!(rel <= 0.02, "relative deviation {rel}");
}
