//! Coefficient-wise shift operators on the Haar basis.

use super::decomposition::{lambda, AverageExpansion};
use super::{check_kernel_dim, haar_pairing};
use crate::error::{Error, Result};
use crate::haar::{FiniteHaarExpansion, HaarFunction, HaarIndex};
use crate::kernel::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftKind {
    /// `h^η_I ↦ h^0_{I∔m} - h^0_I`.
    U,
    /// `h^η_I ↦ h^ζ_{I∔m}`.
    T { zeta: u8 },
    /// `h^η_I ↦ ⟨h^ζ_{I∔m}, T h^η_I⟩ h^η_I`.
    Theta { zeta: u8 },
    /// `h^η_I ↦ ⟨h^0_{I^{(s)}∔m}, T h^η_I⟩ h^η_{I^{(s)}}`.
    Lambda { s: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    pub m: Vec<i64>,
    /// Needed by `Θ` and `Λ`.
    pub kernel: Option<KernelSpec>,
}

impl ShiftSpec {
    pub fn u(m: &[i64]) -> Self {
        ShiftSpec {
            kind: ShiftKind::U,
            m: m.to_vec(),
            kernel: None,
        }
    }

    pub fn t(m: &[i64], zeta: u8) -> Self {
        ShiftSpec {
            kind: ShiftKind::T { zeta },
            m: m.to_vec(),
            kernel: None,
        }
    }

    pub fn theta(m: &[i64], zeta: u8, kernel: KernelSpec) -> Self {
        ShiftSpec {
            kind: ShiftKind::Theta { zeta },
            m: m.to_vec(),
            kernel: Some(kernel),
        }
    }

    pub fn lambda(m: &[i64], s: u32, kernel: KernelSpec) -> Self {
        ShiftSpec {
            kind: ShiftKind::Lambda { s },
            m: m.to_vec(),
            kernel: Some(kernel),
        }
    }

    fn kernel(&self) -> Result<&KernelSpec> {
        self.kernel
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("this shift needs a kernel".into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShiftOutput {
    Haar(FiniteHaarExpansion),
    Averages(AverageExpansion),
}

impl ShiftOutput {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ShiftOutput::Haar(f) => f.eval(x),
            ShiftOutput::Averages(a) => a.eval(x),
        }
    }
}

pub fn shift_apply(spec: &ShiftSpec, f: &FiniteHaarExpansion) -> Result<ShiftOutput> {
    let n = f.dim();
    if spec.m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.m.len(),
        });
    }
    let m = &spec.m[..];
    match spec.kind {
        ShiftKind::U => {
            let mut out = AverageExpansion::new(n);
            if m.iter().all(|v| *v == 0) {
                return Ok(ShiftOutput::Averages(out));
            }
            for (h, &a) in f.iter() {
                out.add_term(h.cube().translate(m), a);
                out.add_term(h.cube(), -a);
            }
            Ok(ShiftOutput::Averages(out))
        }
        ShiftKind::T { zeta: 0 } => {
            let mut out = AverageExpansion::new(n);
            for (h, &a) in f.iter() {
                out.add_term(h.cube().translate(m), a);
            }
            Ok(ShiftOutput::Averages(out))
        }
        ShiftKind::T { zeta } => {
            let mut out = FiniteHaarExpansion::new(n)?;
            for (h, &a) in f.iter() {
                out.add_term(HaarIndex::new(h.cube().translate(m), zeta)?, a)?;
            }
            Ok(ShiftOutput::Haar(out))
        }
        ShiftKind::Theta { zeta } => {
            let k = spec.kernel()?;
            check_kernel_dim(k, n)?;
            let mut out = FiniteHaarExpansion::new(n)?;
            for (h, &a) in f.iter() {
                let target = HaarFunction::from_signature(h.cube().translate(m), zeta)?;
                let c = haar_pairing(k, &target, &HaarFunction::Cancellative(*h), 0.0)?;
                out.add_term(*h, c * a)?;
            }
            Ok(ShiftOutput::Haar(out))
        }
        ShiftKind::Lambda { s } => {
            let k = spec.kernel()?;
            check_kernel_dim(k, n)?;
            let mut out = FiniteHaarExpansion::new(n)?;
            for (h, &a) in f.iter() {
                let c = lambda(k, h, s, m)?;
                out.add_term(h.with_cube(h.cube().ancestor(s)?), c * a)?;
            }
            Ok(ShiftOutput::Haar(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicCube;
    use crate::operators::{phi_tilde_apply, TruncationBudget};

    fn h(k: i32, m: i64) -> HaarIndex {
        HaarIndex::new(DyadicCube::new(k, &[m]).unwrap(), 1).unwrap()
    }

    fn single() -> FiniteHaarExpansion {
        FiniteHaarExpansion::from_terms(1, [(h(0, 0), 1.0)]).unwrap()
    }

    #[test]
    fn examples() {
        let ShiftOutput::Averages(u) = shift_apply(&ShiftSpec::u(&[1]), &single()).unwrap() else {
            panic!()
        };
        assert_eq!(u.eval(&[1.5]), 1.0);
        assert_eq!(u.eval(&[0.5]), -1.0);
        assert_eq!(u.len(), 2);
        let ShiftOutput::Averages(z) = shift_apply(&ShiftSpec::u(&[0]), &single()).unwrap() else {
            panic!()
        };
        assert!(z.is_empty());
        let ShiftOutput::Haar(t) = shift_apply(&ShiftSpec::t(&[2], 1), &single()).unwrap() else {
            panic!()
        };
        assert_eq!(
            t,
            FiniteHaarExpansion::from_terms(1, [(h(0, 2), 1.0)]).unwrap()
        );
        assert!(shift_apply(&ShiftSpec::u(&[1, 1]), &single()).is_err());
        let k = KernelSpec::hilbert(1.0);
        assert!(shift_apply(&ShiftSpec::theta(&[0], 1, k), &single()).is_err());
    }

    #[test]
    fn lambda_factorisation() {
        let k = KernelSpec::hilbert(1.0);
        let f =
            FiniteHaarExpansion::from_terms(1, [(h(0, 0), 1.0), (h(2, 5), -0.5), (h(1, 3), 0.25)])
                .unwrap();
        let s = 1;
        let big_m = 6;
        let phi = phi_tilde_apply(&k, &f, s, &TruncationBudget::new(big_m)).unwrap();
        let mut acc = AverageExpansion::new(1);
        for m in -big_m..=big_m {
            let ShiftOutput::Haar(l) = shift_apply(&ShiftSpec::lambda(&[m], s, k.clone()), &f)
                .unwrap_or_else(|_| ShiftOutput::Haar(FiniteHaarExpansion::new(1).unwrap()))
            else {
                panic!()
            };
            let ShiftOutput::Averages(u) = shift_apply(&ShiftSpec::u(&[m]), &l).unwrap() else {
                panic!()
            };
            acc = acc.add(&u);
        }
        for x in [-7.3, -1.2, 0.3, 2.6, 9.9, 13.1] {
            assert!((acc.eval(&[x]) - phi.value.eval(&[x])).abs() < 1e-13);
        }
    }
}
