//! CSV writers. Numbers use 17 significant digits so files round-trip
//! exactly; every file may start with `#` comment lines (the CLI puts the
//! manifest hash there).

use std::io::{self, Write};

use crate::dynamics::{phase_difference, RatioCurve, Trajectory};
use crate::estimator::EstimatorRow;
use crate::reduction::Spectrum;
use crate::spectral::{EigenBasis, Head};

/// Round-trip formatting of a float.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn preamble<W: Write>(w: &mut W, comments: &[String], header: &str) -> io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{header}")
}

pub fn write_eigenprofile<W: Write>(w: &mut W, comments: &[String], basis: &EigenBasis) -> io::Result<()> {
    preamble(w, comments, "k,f_k,e1,e2")?;
    let f = basis.freqs();
    let (e1, e2) = (basis.head_row(Head::One), basis.head_row(Head::Two));
    for k in 0..basis.len() {
        writeln!(w, "{},{},{},{}", k + 1, num(f[k]), num(e1[k]), num(e2[k]))?;
    }
    Ok(())
}

/// `dphi` is written as `nan` where undefined.
pub fn write_trajectory<W: Write>(w: &mut W, comments: &[String], traj: &Trajectory) -> io::Result<()> {
    preamble(w, comments, "t,abs_a1,abs_a2,dphi")?;
    let dphi = phase_difference(traj);
    for i in 0..traj.len() {
        let d = dphi[i].map_or_else(|| "nan".to_string(), num);
        writeln!(w, "{},{},{},{}", num(traj.times[i]), num(traj.a1[i].norm()), num(traj.a2[i].norm()), d)?;
    }
    Ok(())
}

/// `seed` is left empty for deterministic initial states.
pub fn write_ratio_curve<W: Write>(w: &mut W, comments: &[String], curve: &RatioCurve) -> io::Result<()> {
    preamble(w, comments, "omega,ratio,dispersion,n_bath,t_max_TR,ensemble,seed")?;
    let seed = curve.seed.map(|s| s.to_string()).unwrap_or_default();
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(p.omega),
            num(p.ratio),
            num(p.dispersion),
            curve.n_bath,
            num(curve.t_max_tr),
            curve.ensemble_size,
            seed
        )?;
    }
    Ok(())
}

pub fn write_spectrum<W: Write>(w: &mut W, comments: &[String], s: &Spectrum) -> io::Result<()> {
    preamble(w, comments, "freq,psd_a1,psd_a2")?;
    for i in 0..s.freq.len() {
        writeln!(w, "{},{},{}", num(s.freq[i]), num(s.psd_a1[i]), num(s.psd_a2[i]))?;
    }
    Ok(())
}

pub fn write_estimator<W: Write>(w: &mut W, comments: &[String], rows: &[EstimatorRow]) -> io::Result<()> {
    preamble(w, comments, "omega,ratio_full,ratio_no_cross,ratio_no_xi,ratio_static,ratio_peak")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            num(r.omega),
            num(r.ratio_full),
            num(r.ratio_no_cross),
            num(r.ratio_no_xi),
            num(r.ratio_static),
            num(r.ratio_peak)
        )?;
    }
    Ok(())
}
