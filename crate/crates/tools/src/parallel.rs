//! Robust evaluation fanned out over threads. Chunks are assigned
//! round-robin and reduced in chunk order, so the result does not depend on
//! the thread count.

use std::thread;

use last_core::attack::AttackConfig;
use last_core::evaluator::{self, EvalError, EvalSummary, RobustCounts};
use last_core::{Dataset, NetworkSpec, ParamVector};

pub fn evaluate_parallel(
    spec: &NetworkSpec,
    params: &ParamVector,
    dataset: &Dataset,
    attack: &AttackConfig,
    seed: u64,
    threads: usize,
) -> Result<EvalSummary, EvalError> {
    let threads = threads.max(1);
    if threads == 1 {
        return evaluator::evaluate(spec, params, dataset, attack, seed);
    }
    if dataset.is_empty() {
        return Err(EvalError::Empty);
    }
    attack.validate()?;
    let chunks = evaluator::num_chunks(dataset);
    let mut slots: Vec<Option<Result<RobustCounts, EvalError>>> = vec![None; chunks];
    thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..chunks)
                        .step_by(threads)
                        .map(|k| (k, evaluator::evaluate_chunk(spec, params, dataset, attack, seed, k)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for w in workers {
            for (k, r) in w.join().expect("evaluation worker panicked") {
                slots[k] = Some(r);
            }
        }
    });
    let mut total = RobustCounts::default();
    for slot in slots {
        total = total.merge(slot.expect("every chunk evaluated")?);
    }
    Ok(EvalSummary::from_counts(&total))
}
