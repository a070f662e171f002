//! End-to-end run on a random pair of single-qubit circuits: both
//! embeddings, their mate identities, norm halving, the two-copy bounds and
//! the degradability tests.

use channelforge::channel::{choi_from_stinespring, tensor_power};
use channelforge::degradability::{test_property, Property};
use channelforge::dnorm::{
    diamond_norm_with_limits, identification_probability, repetition_bounds,
};
use channelforge::embed::{
    antidegradable_embedding_with_limits, degradable_embedding_with_limits, verify_with_limits,
    EmbeddingResult,
};
use channelforge::io::CircuitDoc;
use channelforge::random::{random_circuit, seeded, CircuitShape};
use channelforge::{ChannelPair, ChoiMatrix, Circuit, Limits, Result};
use serde_json::{json, Value};

const MATE_TOL: f64 = 1e-9;
const REPETITION_SLACK: f64 = 1e-6;
const GATES_PER_CIRCUIT: usize = 6;

pub struct Outcome {
    pub report: Value,
    /// Names of the failed property checks.
    pub failures: Vec<String>,
}

struct Checks {
    rows: Vec<Value>,
    failures: Vec<String>,
}

impl Checks {
    fn record(&mut self, name: &str, passed: bool, detail: Value) {
        if !passed {
            self.failures.push(name.to_string());
        }
        self.rows
            .push(json!({ "property": name, "passed": passed, "detail": detail }));
    }
}

fn choi(c: &Circuit, limits: &Limits) -> Result<ChoiMatrix> {
    choi_from_stinespring(&c.compile(limits)?, limits)
}

fn dnorm(first: &ChoiMatrix, second: &ChoiMatrix, tol: f64, limits: &Limits) -> Result<f64> {
    let pair = ChannelPair::new(first.clone(), second.clone())?;
    Ok(diamond_norm_with_limits(&pair, tol, limits)?.value)
}

pub fn run(seed: u64, tol: f64, limits: &Limits) -> Result<Outcome> {
    let mut rng = seeded(seed);
    let shape = CircuitShape::square(1, 1, GATES_PER_CIRCUIT);
    let phis = [
        random_circuit(&mut rng, shape),
        random_circuit(&mut rng, shape),
    ];
    let chois = [choi(&phis[0], limits)?, choi(&phis[1], limits)?];
    let mut checks = Checks {
        rows: vec![],
        failures: vec![],
    };

    let delta = dnorm(&chois[0], &chois[1], tol, limits)?;
    let degradable: Vec<EmbeddingResult> = phis
        .iter()
        .map(|p| degradable_embedding_with_limits(p, limits))
        .collect::<Result<_>>()?;
    let antidegradable: Vec<EmbeddingResult> = phis
        .iter()
        .map(|p| antidegradable_embedding_with_limits(p, limits))
        .collect::<Result<_>>()?;

    let mut halved = Vec::new();
    for (name, pair) in [
        ("degradable", &degradable),
        ("antidegradable", &antidegradable),
    ] {
        let value = dnorm(
            &choi(&pair[0].embedded, limits)?,
            &choi(&pair[1].embedded, limits)?,
            tol,
            limits,
        )?;
        let deviation = (value - delta / 2.0).abs();
        checks.record(
            &format!("norm halving ({name})"),
            deviation <= 2.0 * tol,
            json!({ "embedded": value, "half_original": delta / 2.0, "deviation": deviation }),
        );
        halved.push(value);
    }

    let k = 2;
    let powered = dnorm(
        &tensor_power(&chois[0], k, limits)?,
        &tensor_power(&chois[1], k, limits)?,
        tol,
        limits,
    )?;
    let repetition = if delta > 0.0 {
        let rb = repetition_bounds(delta, k)?;
        let inside =
            rb.lower - REPETITION_SLACK <= powered && powered <= rb.upper + REPETITION_SLACK;
        checks.record(
            "two-copy bounds",
            inside,
            json!({ "lower": rb.lower, "value": powered, "upper": rb.upper }),
        );
        json!({ "k": k, "delta": delta, "lower": rb.lower, "upper": rb.upper, "value": powered })
    } else {
        checks.record(
            "two-copy bounds",
            powered <= REPETITION_SLACK,
            json!({ "value": powered }),
        );
        json!({ "k": k, "delta": delta, "value": powered })
    };

    let mut mates = Vec::new();
    let mut tests = Vec::new();
    for (label, e) in ["first", "second"]
        .iter()
        .zip(&degradable)
        .chain(["first", "second"].iter().zip(&antidegradable))
    {
        let flavor = e.flavor.as_str();
        let report = verify_with_limits(e, MATE_TOL, limits)?;
        checks.record(
            &format!("mate identity ({flavor}, {label})"),
            report.passed,
            json!({ "max_deviation": report.max_deviation }),
        );
        mates.push(
            json!({ "flavor": flavor, "channel": label, "max_deviation": report.max_deviation }),
        );

        let property = match e.flavor {
            channelforge::Flavor::Degradable => Property::Degradable,
            channelforge::Flavor::Antidegradable => Property::Antidegradable,
        };
        let feasibility = test_property(&e.embedded.compile(limits)?, property, tol, limits)?;
        checks.record(
            &format!("{flavor} test ({label})"),
            feasibility.feasible,
            json!({ "residual": feasibility.residual }),
        );
        tests.push(json!({
            "channel": format!("{flavor} embedding of {label}"),
            "property": property,
            "feasible": feasibility.feasible,
            "residual": feasibility.residual,
        }));
    }

    let report = json!({
        "seed": seed,
        "tol": tol,
        "circuits": [CircuitDoc::from(&phis[0]), CircuitDoc::from(&phis[1])],
        "dnorm": {
            "original": delta,
            "degradable": halved[0],
            "antidegradable": halved[1],
        },
        "identification_probability": {
            "original": identification_probability(delta.min(2.0))?,
            "degradable": identification_probability(halved[0].min(2.0))?,
        },
        "repetition": repetition,
        "mates": mates,
        "degradability": tests,
        "checks": checks.rows,
        "passed": checks.failures.is_empty(),
    });
    Ok(Outcome {
        report,
        failures: checks.failures,
    })
}
