//! Trains logistic regression and NBSVM on a synthetic corpus, checks the
//! gradient numerically and dumps a model.

use toxprep::features::{build_vocabulary, vectorize, SparseVector};
use toxprep::models::{gradient_check, train, Hyper, ModelKind};
use toxprep::synth::{generate_documents, SynthConfig};
use toxprep::textops::tokenize;

fn main() -> toxprep::Result<()> {
    let docs = generate_documents(&SynthConfig { n_docs: 1000, ..SynthConfig::default() });
    let (train_docs, test_docs) = docs.split_at(800);
    let tokens: Vec<Vec<String>> = train_docs.iter().map(|d| tokenize(&d.text.to_lowercase())).collect();
    let vocab = build_vocabulary(&tokens, (1, 2), 2)?;
    let x: Vec<SparseVector> = tokens.iter().map(|t| vectorize(t, &vocab)).collect();
    let y: Vec<u8> = train_docs.iter().map(|d| d.label).collect();
    let x_test: Vec<SparseVector> = test_docs.iter().map(|d| vectorize(&tokenize(&d.text.to_lowercase()), &vocab)).collect();

    let hyper = Hyper { seed: 3, ..Hyper::default() };
    for kind in [ModelKind::Logit, ModelKind::Nbsvm] {
        let model = train(kind, &x, &y, vocab.len(), &hyper)?;
        let correct = x_test
            .iter()
            .zip(test_docs)
            .filter(|(xi, d)| u8::from(model.predict_proba(xi) >= 0.5) == d.label)
            .count();
        println!(
            "{kind}: V={} loss {:.4} -> {:.4}, held-out accuracy {:.3}",
            vocab.len(),
            model.loss_trace[0],
            model.loss_trace.last().unwrap(),
            correct as f64 / x_test.len() as f64
        );
    }

    let small: Vec<SparseVector> = x.iter().take(20).map(|xi| {
        SparseVector::new(xi.entries().iter().filter(|(j, _)| *j < 8).copied().collect()).unwrap()
    }).collect();
    let mut ys: Vec<u8> = y.iter().take(20).copied().collect();
    ys[0] = 0;
    ys[1] = 1;
    for kind in [ModelKind::Logit, ModelKind::Nbsvm] {
        println!("{kind} gradient check: max rel err {:.2e}", gradient_check(kind, &small, &ys, 8, &hyper, 1e-5)?);
    }

    let tiny = train(ModelKind::Nbsvm, &small, &ys, 8, &hyper)?;
    print!("model dump:\n{}", tiny.dump());
    Ok(())
}
