use std::io::{BufRead, Write};

use super::phase::{Phase, PhaseSample};
use super::qutrit::QutritSample;
use crate::{Error, Result};

pub const QUTRIT_HEADER: &str = "x1,x2,c1,c2,c3,class";
pub const PHASE_HEADER: &str = "gamma_ratio,t_ratio,phase";

pub fn write_qutrit_csv<W: Write>(mut w: W, samples: &[QutritSample]) -> Result<()> {
    writeln!(w, "{QUTRIT_HEADER}")?;
    for s in samples {
        let [c1, c2, c3] = s.amplitudes;
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.x1, s.x2, c1, c2, c3, s.true_class
        )?;
    }
    Ok(())
}

pub fn write_phase_csv<W: Write>(mut w: W, samples: &[PhaseSample]) -> Result<()> {
    writeln!(w, "{PHASE_HEADER}")?;
    for s in samples {
        writeln!(w, "{:.16e},{:.16e},{}", s.gamma_ratio, s.t_ratio, s.true_phase.name())?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn records<R: BufRead>(r: R, header: &str, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut lines = r.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).transpose()?;
    if first.as_deref().map(str::trim) != Some(header) {
        return Err(parse_err(1, format!("expected header `{header}`")));
    }
    for (i, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = l.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(parse_err(i + 1, format!("expected {width} fields, found {}", fields.len())));
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn float(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(line, format!("bad number `{s}`")))
}

pub fn read_qutrit_csv<R: BufRead>(r: R) -> Result<Vec<QutritSample>> {
    records(r, QUTRIT_HEADER, 6)?
        .into_iter()
        .map(|(line, f)| {
            let amps = [float(line, &f[2])?, float(line, &f[3])?, float(line, &f[4])?];
            let class: u8 = f[5]
                .parse()
                .ok()
                .filter(|c| (1..=3).contains(c))
                .ok_or_else(|| parse_err(line, format!("bad class `{}`", f[5])))?;
            let s = QutritSample::new(float(line, &f[0])?, float(line, &f[1])?, amps);
            if s.true_class != class {
                return Err(parse_err(line, "class disagrees with amplitudes"));
            }
            Ok(s)
        })
        .collect()
}

pub fn read_phase_csv<R: BufRead>(r: R) -> Result<Vec<PhaseSample>> {
    records(r, PHASE_HEADER, 3)?
        .into_iter()
        .map(|(line, f)| {
            Ok(PhaseSample {
                gamma_ratio: float(line, &f[0])?,
                t_ratio: float(line, &f[1])?,
                true_phase: Phase::from_name(&f[2]).ok_or_else(|| parse_err(line, format!("bad phase `{}`", f[2])))?,
            })
        })
        .collect()
}
