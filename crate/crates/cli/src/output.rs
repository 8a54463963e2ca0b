//! CSV and JSON emission. Floats are written with 17 significant digits so
//! every value round-trips exactly.

use std::io::{self, Write};

use memcoll::{Summary, WitnessRecord};
use serde_json::{json, Value};

pub const SUMMARY_SCHEMA: u32 = 1;

pub const COLLISION_HEADER: &str =
    "n,p0,p1,a,b,c_re,c_im,d_re,d_im,N_q,g_n,delta_I,avg_dE_over_omega,choi_min_eig,residual";

pub const SWEEP_HEADER: &str = "index,grid_value,I_RHP,I_LFS,sum_Nq,analysed,error";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One line of collisions.csv.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRow {
    pub n: usize,
    /// Populations before collision n.
    pub p0: f64,
    pub p1: f64,
    pub a: f64,
    pub b: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub d_re: f64,
    pub d_im: f64,
    pub n_q: f64,
    pub g_n: f64,
    pub delta_i: f64,
    pub avg_de_over_omega: f64,
    pub choi_min_eig: f64,
    pub residual: f64,
}

impl CollisionRow {
    pub fn new(r: &WitnessRecord, omega_s: f64) -> Self {
        Self {
            n: r.n,
            p0: r.p0,
            p1: r.p1,
            a: r.a,
            b: r.b,
            c_re: r.c_re,
            c_im: r.c_im,
            d_re: r.d_re,
            d_im: r.d_im,
            n_q: r.n_q,
            g_n: r.g_n,
            delta_i: r.delta_i,
            avg_de_over_omega: r.avg_de / omega_s,
            choi_min_eig: r.choi_min_eig,
            residual: r.residual,
        }
    }

    pub fn to_csv(&self) -> String {
        let values = [
            self.p0,
            self.p1,
            self.a,
            self.b,
            self.c_re,
            self.c_im,
            self.d_re,
            self.d_im,
            self.n_q,
            self.g_n,
            self.delta_i,
            self.avg_de_over_omega,
            self.choi_min_eig,
            self.residual,
        ];
        let mut line = self.n.to_string();
        for v in values {
            line.push(',');
            line.push_str(&fmt_f64(v));
        }
        line
    }
}

pub fn write_collisions<W: Write>(mut out: W, rows: &[CollisionRow]) -> io::Result<()> {
    writeln!(out, "{COLLISION_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    out.flush()
}

/// Outcome of one sweep point. Failed points keep whatever partial summary
/// was computed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    fn measures(&self) -> (f64, f64, f64, usize) {
        match &self.summary {
            Some(s) => (s.i_rhp, s.i_lfs, s.sum_nq, s.analysed),
            None => (f64::NAN, f64::NAN, f64::NAN, 0),
        }
    }

    pub fn to_csv(&self) -> String {
        let (rhp, lfs, nq, analysed) = self.measures();
        let error = self
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '"'], " ");
        format!(
            "{},{},{},{},{},{},{}",
            self.index,
            fmt_f64(self.value),
            fmt_f64(rhp),
            fmt_f64(lfs),
            fmt_f64(nq),
            analysed,
            error
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "index": self.index,
            "grid_value": self.value,
            "summary": self.summary,
            "error": self.error,
        })
    }
}

pub fn write_sweep_csv<W: Write>(mut out: W, points: &[SweepPoint]) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for p in points {
        writeln!(out, "{}", p.to_csv())?;
    }
    out.flush()
}
