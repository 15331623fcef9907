//! Reader for `.obs` observation files.
//!
//! One entry per line, `#` starts a comment:
//!
//! ```text
//! X1 Y1 = 0.7071   # pair correlator <X1Y1>
//! X1 = 0.2         # single mean <X1>
//! ```

use crate::dsl::VariableId;
use crate::lhv::Observations;

use super::ReportError;

pub fn parse_observations(name: &str, text: &str) -> Result<Observations, ReportError> {
    let mut out = Observations::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ReportError::Observation {
            path: name.to_string(),
            line: i + 1,
            message,
        };
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| err("expected `<variables> = <value>`".into()))?;
        let value: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| err(format!("`{}` is not a number", rhs.trim())))?;
        if !value.is_finite() || value.abs() > 1.0 {
            return Err(err(format!("{value} is outside [-1, 1]")));
        }
        let vars = lhs
            .split_whitespace()
            .map(|t| t.parse::<VariableId>().map_err(|e| err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        match vars.as_slice() {
            [a] => {
                if out.means.contains_key(a) {
                    return Err(err(format!("mean of {a} given twice")));
                }
                out.set_mean(*a, value);
            }
            [a, b] if a != b => {
                let key = if a <= b { (*a, *b) } else { (*b, *a) };
                if out.correlators.contains_key(&key) {
                    return Err(err(format!("correlator <{a}{b}> given twice")));
                }
                out.set_correlator(*a, *b, value);
            }
            [_, _] => return Err(err("a correlator needs two distinct variables".into())),
            _ => return Err(err("expected one or two variables before `=`".into())),
        }
    }
    if out.correlators.is_empty() && out.means.is_empty() {
        return Err(ReportError::Observation {
            path: name.to_string(),
            line: 0,
            message: "no observations".into(),
        });
    }
    Ok(out)
}
