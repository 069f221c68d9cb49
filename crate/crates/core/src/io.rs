//! CSV and JSON emission with 17 significant digits per float.

use std::io::{self, Write};

use serde::Serialize;

use crate::lyapunov::{EnergySeries, Transition};
use crate::sim::Trajectory;

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn write_row(out: &mut impl Write, values: impl IntoIterator<Item = f64>) -> io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            out.write_all(b",")?;
        }
        first = false;
        out.write_all(fmt_f64(v).as_bytes())?;
    }
    out.write_all(b"\n")
}

/// Header `t,x1,v1,x2,v2,h2,...` and one row per stored sample.
pub fn write_trajectory_csv(out: &mut impl Write, traj: &Trajectory) -> io::Result<()> {
    let n = traj.vehicles();
    let mut header = vec!["t".to_string(), "x1".into(), "v1".into()];
    for i in 2..=n {
        header.push(format!("x{i}"));
        header.push(format!("v{i}"));
        header.push(format!("h{i}"));
    }
    writeln!(out, "{}", header.join(","))?;
    for (s, h) in traj.samples.iter().zip(&traj.headways) {
        let mut row = Vec::with_capacity(3 * n);
        row.extend([s.t, s.x[0], s.v[0]]);
        for i in 1..n {
            row.extend([s.x[i], s.v[i], h[i - 1]]);
        }
        write_row(out, row)?;
    }
    Ok(())
}

/// Header `t,E,F` with `F2,...,F{N+1}` appended for platoons.
pub fn write_energy_csv(out: &mut impl Write, series: &EnergySeries) -> io::Result<()> {
    let mut header = vec!["t".to_string(), "E".into(), "F".into()];
    header.extend((0..series.chain.len()).map(|k| format!("F{}", k + 2)));
    writeln!(out, "{}", header.join(","))?;
    for k in 0..series.t.len() {
        let row = [series.t[k], series.e[k], series.f[k]]
            .into_iter()
            .chain(series.chain.iter().map(|c| c[k]));
        write_row(out, row)?;
    }
    Ok(())
}

/// Header `V,v`: optimal velocity and velocity of the first follower.
pub fn write_phase_csv(out: &mut impl Write, traj: &Trajectory) -> io::Result<()> {
    writeln!(out, "V,v")?;
    for (s, h) in traj.samples.iter().zip(&traj.headways) {
        write_row(out, [traj.params.ov(h[0]), s.v[1]])?;
    }
    Ok(())
}

/// Compact JSON whose floats use the 17-digit format.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serializes `value` as compact JSON plus a trailing newline.
/// Non-finite floats are written as `null`.
pub fn write_json(out: &mut impl Write, value: &impl Serialize) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, Digits17);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub fn to_json_string(value: &impl Serialize) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn write_transitions_json(out: &mut impl Write, log: &[Transition]) -> io::Result<()> {
    write_json(out, &log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::Region;
    use crate::model::ModelParams;
    use crate::sim::{simulate, LeaderProfile, PlatoonState};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 42.0, f64::MAX, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn trajectory_header_and_rows() {
        let p = ModelParams::reference();
        let init = PlatoonState::from_headways(15.0, &[10.0, 8.0], &[5.0, 6.0], p.length).unwrap();
        let traj = simulate(&init, &LeaderProfile::Constant { velocity: 15.0 }, &p, 0.1, 0.3).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,v1,x2,v2,h2,x3,v3,h3");
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[5], 10.0);
        assert_eq!(text.lines().count(), 5);
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn json_floats_and_newline() {
        let log = vec![Transition {
            t: 0.5,
            from: Region::C,
            to: Region::D,
        }];
        let s = to_json_string(&log);
        assert_eq!(s, "[{\"t\":5.0000000000000000e-1,\"from\":\"C\",\"to\":\"D\"}]\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0]["t"].as_f64(), Some(0.5));
    }
}
