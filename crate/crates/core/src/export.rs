//! Plain-text tables written by the command line tool.

use std::fmt::Write as _;

use serde::Serialize;

use crate::boundary_chain::{
    strip_kernel_bruteforce, strip_kernel_exact, strip_kernel_rational, strip_kernel_row,
    BoundaryTrajectory, StripTracker,
};
use crate::branching::SliceMarginal;
use crate::error::Result;
use crate::exact::to_f64;

/// `n,M_n,is_strip_stop,t` with `t = max{t : n_t <= n}`.
pub fn trajectory_csv(traj: &BoundaryTrajectory) -> Result<String> {
    let mut out = String::from("n,M_n,is_strip_stop,t\n");
    let mut tracker = StripTracker::new(traj.m0);
    writeln!(out, "0,{},1,1", traj.m0).unwrap();
    for (i, mv) in traj.moves.iter().enumerate() {
        let n = i as u64 + 1;
        let stop = tracker.observe(n, traj.values[i + 1], mv)?.is_some();
        writeln!(
            out,
            "{n},{},{},{}",
            traj.values[i + 1],
            u8::from(stop),
            tracker.last_stop().t
        )
        .unwrap();
    }
    Ok(out)
}

/// `m,k,p_exact,p_bruteforce` from `k = 1 - m` until the kernel tail is
/// below `tail_tol`; the enumeration column is empty past `len_cap`.
/// Rows with `m <= 12` are rounded from exact rationals.
pub fn kernel_table_csv(ms: &[u64], len_cap: usize, tail_tol: f64) -> Result<String> {
    let mut out = String::from("m,k,p_exact,p_bruteforce\n");
    for &m in ms {
        let row = strip_kernel_row(m, tail_tol)?;
        let bf = strip_kernel_bruteforce(m, len_cap)?;
        for k in row.indices() {
            let exact = if m <= 12 {
                to_f64(&strip_kernel_rational(m, k)?)
            } else {
                strip_kernel_exact(m, k)?
            };
            let brute = if 2 * m as i64 + k <= len_cap as i64 {
                format!("{:e}", bf.mass.get(&k).map_or(0.0, to_f64))
            } else {
                String::new()
            };
            writeln!(out, "{m},{k},{exact:e},{brute}").unwrap();
        }
    }
    Ok(out)
}

/// `m0,j,m,p` for every tabulated `m >= 1`.
pub fn marginal_csv(marginals: &[SliceMarginal]) -> String {
    let mut out = String::from("m0,j,m,p\n");
    for d in marginals {
        for (m, p) in d.probs.iter().enumerate().skip(1) {
            writeln!(out, "{},{},{m},{p:e}", d.m0, d.j).unwrap();
        }
    }
    out
}

/// One value per line under a `value` header.
pub fn samples_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20 + 6);
    out.push_str("value\n");
    for v in values {
        writeln!(out, "{v:e}").unwrap();
    }
    out
}

/// Metadata stored next to a sample file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSidecar {
    pub spec: String,
    pub dt: Option<f64>,
    pub horizon: f64,
    pub seed: u64,
    pub samples: usize,
}
