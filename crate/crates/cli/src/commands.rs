//! One function per subcommand. Each returns the machine-readable payload, a short
//! human summary and the exit status.

use indefinite_theta::chains::{CertificateStatus, Collection, PositionCertificate, Tristate};
use indefinite_theta::rational::format_rat;
use indefinite_theta::theta::{completed_theta, holomorphic_theta, lowering_fd, shadow_value, QExpansion};
use indefinite_theta::verify::{self, Suite, SuiteReport, VerifyOptions};
use indefinite_theta::{erf_e, CertifiedCollection, Complex64, Rat, ThetaValue};
use serde_json::{json, Value};

use crate::job::JobSpec;
use crate::{CliError, Exit, Format};

pub struct Outcome {
    pub payload: Payload,
    pub summary: String,
    pub exit: Exit,
}

pub enum Payload {
    Json(Value),
    Csv(String),
}

const DEFAULT_FD_STEP: f64 = 1e-3;

fn rats(v: &[Rat]) -> Value {
    Value::from(v.iter().map(format_rat).collect::<Vec<_>>())
}

fn complex(z: Complex64, est_error: f64) -> Value {
    json!({ "re": z.re, "im": z.im, "est_error": est_error })
}

fn document(command: &str, job: &JobSpec, result: Value) -> Value {
    json!({ "command": command, "job": job, "result": result })
}

fn json_only(format: Format, command: &str) -> Result<(), CliError> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::input(format!("`{command}` has no CSV form; use --format json"))),
    }
}

fn status_name(status: CertificateStatus) -> &'static str {
    match status {
        CertificateStatus::Certified => "certified",
        CertificateStatus::Refuted => "refuted",
        CertificateStatus::Undecided => "undecided",
    }
}

fn status_exit(status: CertificateStatus) -> Exit {
    match status {
        CertificateStatus::Certified => Exit::Ok,
        CertificateStatus::Refuted => Exit::Refuted,
        CertificateStatus::Undecided => Exit::Undecided,
    }
}

fn certificate_json(cert: &PositionCertificate) -> Value {
    json!({
        "status": status_name(cert.status),
        "witness": cert.witness.as_deref().map(rats),
        "resolution": cert.resolution,
        "margin": cert.margin,
    })
}

pub fn check(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    json_only(format, "check")?;
    let space = job.space()?;
    let collection = job.collection_in(&space)?;
    let cert = collection.certify(&job.certify_options());
    let very_good = match &collection {
        Collection::Cubical(c) => Some(c.very_good_position()),
        Collection::Simplicial(_) => None,
    };
    let mut result = certificate_json(&cert);
    result["kind"] = json!(collection.kind());
    result["q"] = json!(collection.q());
    result["very_good_position"] = json!(very_good.map(|t| t == Tristate::True));
    let mut summary = format!("{} collection, q = {}: {}", collection.kind(), collection.q(), status_name(cert.status));
    if let Some(w) = &cert.witness {
        summary += &format!(" at s = ({})", w.iter().map(format_rat).collect::<Vec<_>>().join(", "));
    }
    Ok(Outcome { payload: Payload::Json(document("check", job, result)), summary, exit: status_exit(cert.status) })
}

pub fn phi(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    json_only(format, "phi")?;
    let space = job.space()?;
    let collection = job.collection_in(&space)?;
    let x = job.x()?;
    if x.len() != space.dim() {
        return Err(CliError::input(format!("x has {} coordinates, the lattice has rank {}", x.len(), space.dim())));
    }
    let phi = collection.phi(&x);
    let phi_neg = collection.phi(&x.neg());
    let intersection = match &collection {
        Collection::Cubical(c) => c.intersection_point(&x).map(|p| {
            json!({
                "s": p.exact.as_deref().map(rats),
                "s_float": p.coords,
                "intersection_number": c.intersection_number(&x).ok().map(|r| format_rat(&r)),
            })
        }),
        Collection::Simplicial(s) => s.intersection_point(&x).map(|p| {
            json!({ "s": p.exact.as_deref().map(rats), "s_float": p.s, "lambda": p.lambda })
        }),
    };
    let result = json!({
        "kind": collection.kind(),
        "q": collection.q(),
        "phi": format_rat(&phi),
        "phi_neg_x": format_rat(&phi_neg),
        "regular": collection.is_regular(&x),
        "intersection": intersection,
    });
    let summary = format!("Φ(x) = {}", format_rat(&phi));
    Ok(Outcome { payload: Payload::Json(document("phi", job, result)), summary, exit: Exit::Ok })
}

pub fn erf(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    json_only(format, "erf")?;
    let space = job.space()?;
    let c = job.erf_vectors(&space)?;
    let x = job.x()?;
    let ev = job.evaluator(1e-12);
    let recursive = ev.eq_recursive(&space, &c, &x)?;
    let oracle = ev.eq_oracle(&space, &c, &x)?;
    let closed_form = if c.len() == 1 {
        let n = space.normalize_negative(&c[0])?;
        Some(erf_e(space.inner(&x, &n)?))
    } else {
        None
    };
    let result = json!({
        "q": c.len(),
        "recursive": recursive,
        "oracle": oracle.value,
        "stderr": oracle.stderr,
        "samples": oracle.samples,
        "abs_diff": (recursive - oracle.value).abs(),
        "closed_form": closed_form,
    });
    let summary = format!("E_{} = {recursive:.12} (oracle {:.6} ± {:.1e})", c.len(), oracle.value, oracle.stderr);
    Ok(Outcome { payload: Payload::Json(document("erf", job, result)), summary, exit: Exit::Ok })
}

/// Certifies the job's collection for lattice sums, honouring `force`.
fn admitted(job: &JobSpec, collection: Collection) -> Result<CertifiedCollection, CliError> {
    let cert = collection.certify(&job.certify_options());
    if cert.is_certified() || job.force {
        return Ok(CertifiedCollection::assume(collection, cert));
    }
    Err(CliError {
        exit: status_exit(cert.status),
        message: format!("collection is {}; pass --force to evaluate anyway", status_name(cert.status)),
    })
}

fn expansion_csv(e: &QExpansion) -> String {
    let mut out = String::from("exponent,coefficient\n");
    for (n, c) in e.terms() {
        out += &format!("{},{}\n", format_rat(n), format_rat(c));
    }
    out
}

fn expansion_json(e: &QExpansion) -> Value {
    let terms: Vec<Value> =
        e.terms().iter().map(|(n, c)| json!({ "exponent": format_rat(n), "coefficient": format_rat(c) })).collect();
    json!({ "truncation": format_rat(e.truncation()), "terms": terms })
}

fn theta_value(v: &ThetaValue) -> Value {
    let mut out = complex(v.value, v.est_error);
    out["truncation_radius"] = json!(v.truncation_radius);
    out
}

pub fn theta(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    let lattice = job.even_lattice()?;
    let coset = job.coset(&lattice)?;
    let cc = admitted(job, job.collection_in(lattice.space())?)?;
    let expansion = job.n.map(|n| holomorphic_theta(&lattice, &coset, &cc, n)).transpose()?;
    if let Format::Csv = format {
        let e = expansion.ok_or_else(|| CliError::input("CSV output is the q-expansion table and needs N"))?;
        let summary = format!("{} terms up to q^{}", e.len(), format_rat(e.truncation()));
        return Ok(Outcome { payload: Payload::Csv(expansion_csv(&e)), summary, exit: Exit::Ok });
    }
    if expansion.is_none() && job.tau.is_empty() {
        return Err(CliError::input("theta needs N (q-expansion) or at least one tau (values)"));
    }
    let opts = job.theta_options();
    let mut values = Vec::new();
    for t in &job.tau {
        let tau = t.point()?;
        let v = completed_theta(&lattice, &coset, &cc, tau, &opts)?;
        let mut entry = json!({ "tau": [t.u, t.v], "completed": theta_value(&v) });
        if let Some(e) = &expansion {
            entry["holomorphic"] = complex(e.evaluate(tau), 0.0);
        }
        values.push(entry);
    }
    let summary = match &expansion {
        Some(e) => format!("{} expansion terms, {} values", e.len(), values.len()),
        None => format!("{} values", values.len()),
    };
    let result = json!({
        "certificate": certificate_json(cc.certificate()),
        "expansion": expansion.as_ref().map(expansion_json),
        "values": values,
    });
    Ok(Outcome { payload: Payload::Json(document("theta", job, result)), summary, exit: Exit::Ok })
}

pub fn shadow(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    let lattice = job.even_lattice()?;
    let coset = job.coset(&lattice)?;
    let cc = admitted(job, job.collection_in(lattice.space())?)?;
    if job.tau.is_empty() {
        return Err(CliError::input("shadow needs at least one tau"));
    }
    let opts = job.theta_options();
    let h = job.fd_step.unwrap_or(DEFAULT_FD_STEP);
    let mut rows = Vec::new();
    let mut csv = String::from("u,v,shadow_re,shadow_im,shadow_err,fd_re,fd_im,fd_err,abs_diff\n");
    let mut worst: f64 = 0.0;
    for t in &job.tau {
        let tau = t.point()?;
        let s = shadow_value(&lattice, &coset, &cc, tau, &opts)?;
        let fd = lowering_fd(&lattice, &coset, &cc, tau, h, &opts)?;
        let diff = (s.value - fd.value).norm();
        worst = worst.max(diff);
        csv += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.u, t.v, s.value.re, s.value.im, s.est_error, fd.value.re, fd.value.im, fd.est_error, diff
        );
        rows.push(json!({
            "tau": [t.u, t.v],
            "shadow": theta_value(&s),
            "lowering_fd": complex(fd.value, fd.est_error),
            "abs_diff": diff,
        }));
    }
    let summary = format!("{} points, max |shadow - lowering| = {worst:.3e}", rows.len());
    let payload = match format {
        Format::Csv => Payload::Csv(csv),
        Format::Json => Payload::Json(document(
            "shadow",
            job,
            json!({ "certificate": certificate_json(cc.certificate()), "fd_step": h, "values": rows }),
        )),
    };
    Ok(Outcome { payload, summary, exit: Exit::Ok })
}

pub fn verify(job: &JobSpec, format: Format) -> Result<Outcome, CliError> {
    let suites: Vec<Suite> = match job.suite.as_deref() {
        None | Some("all") => Suite::ALL.to_vec(),
        Some(name) => vec![name.parse()?],
    };
    let mut evaluator = VerifyOptions::default().evaluator;
    if let Some(n) = job.mc_samples {
        evaluator.mc_samples = n;
    }
    if let Some(seed) = job.seed {
        evaluator.rng_seed = seed;
    }
    let opts = VerifyOptions { tol: job.tol, evaluator };
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| verify::run_suite(s, &opts)).collect::<Result<_, _>>()?;
    let passed = reports.iter().all(SuiteReport::passed);
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "{:<18} {:>4} cases  max error {:.2e}  tol {:.1e}  {}",
                r.suite.name(),
                r.cases,
                r.max_error,
                r.tolerance,
                if r.passed() { "pass" } else { "FAIL" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let payload = match format {
        Format::Csv => {
            let mut out = String::from("suite,cases,failures,max_error,tolerance,passed\n");
            for r in &reports {
                out += &format!("{},{},{},{},{},{}\n", r.suite, r.cases, r.failures, r.max_error, r.tolerance, r.passed());
            }
            Payload::Csv(out)
        }
        Format::Json => Payload::Json(document("verify", job, json!({ "passed": passed, "suites": reports }))),
    };
    Ok(Outcome { payload, summary, exit: if passed { Exit::Ok } else { Exit::NonConvergence } })
}
