use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

type Q = Ratio<i128>;

/// Methods with a closed-form cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// RGD, canonical metric, QR retraction.
    RgdCQr,
    /// RGD, Euclidean metric, QR retraction.
    RgdEQr,
    /// RGD, canonical metric, Cayley retraction.
    RgdCC,
    /// RGD, Euclidean metric, Cayley retraction.
    RgdEC,
    Own,
    TCwy,
    /// Full compact WY apply over `T` columns, including preprocessing.
    CwyApply,
    /// Sequential Householder apply over `T` columns.
    HrApply,
}

/// Every method parametrizing `St(N, M)`.
pub const STIEFEL_METHODS: [Method; 6] = [
    Method::RgdCQr,
    Method::RgdEQr,
    Method::RgdCC,
    Method::RgdEC,
    Method::Own,
    Method::TCwy,
];

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::RgdCQr => "RGD-C-QR",
            Method::RgdEQr => "RGD-E-QR",
            Method::RgdCC => "RGD-C-C",
            Method::RgdEC => "RGD-E-C",
            Method::Own => "OWN",
            Method::TCwy => "T-CWY",
            Method::CwyApply => "CWY-apply",
            Method::HrApply => "HR-apply",
        }
    }

    pub fn is_stiefel(self) -> bool {
        !matches!(self, Method::CwyApply | Method::HrApply)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            STIEFEL_METHODS.as_slice(),
            &[Method::CwyApply, Method::HrApply],
        ]
        .concat()
        .into_iter()
        .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    /// `N x M` Stiefel parametrization.
    Stiefel { n: u64, m: u64 },
    /// `L` reflections in `R^N` applied to `T` columns.
    Apply { n: u64, l: u64, t: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopEstimate {
    pub method: Method,
    pub dims: Dims,
    pub flops: Ratio<i128>,
}

impl FlopEstimate {
    /// Nearest integer, halves away from zero.
    pub fn rounded(&self) -> i128 {
        self.flops.round().to_integer()
    }
}

fn q(x: u64) -> Q {
    Q::from_integer(x as i128)
}

fn frac(num: i128, den: i128) -> Q {
    Q::new(num, den)
}

/// Leading-term cost of `method` at `dims`, in exact rational arithmetic.
pub fn estimate(method: Method, dims: Dims) -> Result<FlopEstimate> {
    let flops = match (method.is_stiefel(), dims) {
        (true, Dims::Stiefel { n, m }) => {
            if n < m {
                return Err(Error::InvalidConfig(format!(
                    "need N >= M, got N = {n}, M = {m}"
                )));
            }
            let (n, m) = (q(n), q(m));
            let nm2 = n * m * m;
            let m3 = m * m * m;
            match method {
                Method::RgdCQr => q(10) * nm2 - frac(2, 3) * m3,
                Method::RgdEQr => q(14) * nm2 - frac(2, 3) * m3,
                Method::RgdCC => q(28) * nm2 + q(16) * m3,
                Method::RgdEC => q(72) * nm2 + q(25) * m3,
                Method::Own => q(4) * nm2 + frac(14, 3) * m3,
                Method::TCwy => q(4) * nm2 + frac(7, 3) * m3,
                Method::CwyApply | Method::HrApply => unreachable!(),
            }
        }
        (false, Dims::Apply { n, l, t }) => {
            if l > n {
                return Err(Error::InvalidConfig(format!(
                    "need L <= N, got N = {n}, L = {l}"
                )));
            }
            let (n, l, t) = (q(n), q(l), q(t));
            match method {
                Method::CwyApply => t * l * n + l * l * n + l * l * l,
                _ => t * l * n,
            }
        }
        _ => {
            return Err(Error::InvalidConfig(format!(
                "{method} does not take dims {dims:?}"
            )))
        }
    };
    Ok(FlopEstimate {
        method,
        dims,
        flops,
    })
}

/// CSV of every Stiefel method over the grid `ns x ms` (pairs with
/// `M > N` skipped): `method,n,m,flops_exact,flops_rounded`.
pub fn grid_csv(ns: &[u64], ms: &[u64]) -> Result<String> {
    let mut out = String::from("method,n,m,flops_exact,flops_rounded\n");
    for &n in ns {
        for &m in ms.iter().filter(|&&m| m <= n) {
            for method in STIEFEL_METHODS {
                let e = estimate(method, Dims::Stiefel { n, m })?;
                let _ = writeln!(out, "{method},{n},{m},{},{}", e.flops, e.rounded());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cwy_at_64_16() {
        let e = estimate(Method::TCwy, Dims::Stiefel { n: 64, m: 16 }).unwrap();
        assert_eq!(e.flops, Q::new(225_280, 3));
        assert_eq!(e.rounded(), 75_093);
    }

    #[test]
    fn parse_round_trip_and_unknown() {
        for m in STIEFEL_METHODS {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("hr-apply".parse::<Method>().unwrap(), Method::HrApply);
        assert_eq!(
            "QR-ONLY".parse::<Method>(),
            Err(Error::UnknownMethod("QR-ONLY".into()))
        );
    }

    #[test]
    fn mismatched_dims_rejected() {
        assert!(estimate(Method::TCwy, Dims::Apply { n: 4, l: 4, t: 1 }).is_err());
        assert!(estimate(Method::Own, Dims::Stiefel { n: 2, m: 3 }).is_err());
    }
}
