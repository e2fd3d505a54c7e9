use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Cos,
    Abs,
    Sigmoid,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sigmoid" => Func::Sigmoid,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Structural-equation right-hand side. `Var` indexes the slot array the
/// expression was compiled against.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// Fresh Gaussian draw with the given mean and standard deviation.
    Normal(Box<Expr>, Box<Expr>),
    /// Fresh uniform draw on `[lo, hi)`.
    Uniform(Box<Expr>, Box<Expr>),
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

impl Expr {
    pub fn eval<R: Rng + ?Sized>(&self, slots: &[f64], rng: &mut R) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => slots[*i],
            Expr::Neg(e) => -e.eval(slots, rng),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(slots, rng), b.eval(slots, rng));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(slots, rng);
                match f {
                    Func::Exp => libm::exp(a),
                    Func::Cos => libm::cos(a),
                    Func::Abs => libm::fabs(a),
                    Func::Sigmoid => sigmoid(a),
                    Func::Pow => libm::pow(a, args[1].eval(slots, rng)),
                }
            }
            Expr::Normal(mean, sd) => {
                let (mean, sd) = (mean.eval(slots, rng), sd.eval(slots, rng));
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Expr::Uniform(lo, hi) => {
                let (lo, hi) = (lo.eval(slots, rng), hi.eval(slots, rng));
                lo + (hi - lo) * rng.random::<f64>()
            }
        }
    }

    /// Slot indices referenced anywhere in the expression.
    pub fn references(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(i) => out.push(*i),
            Expr::Neg(e) => e.references(out),
            Expr::Bin(_, a, b) | Expr::Normal(a, b) | Expr::Uniform(a, b) => {
                a.references(out);
                b.references(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.references(out)),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Normal(..) | Expr::Uniform(..) => true,
            Expr::Neg(e) => e.is_stochastic(),
            Expr::Bin(_, a, b) => a.is_stochastic() || b.is_stochastic(),
            Expr::Call(_, args) => args.iter().any(Expr::is_stochastic),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arithmetic_and_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Call(Func::Pow, vec![Expr::Var(0), Expr::Num(2.0)])),
            Box::new(Expr::Neg(Box::new(Expr::Call(Func::Abs, vec![Expr::Var(1)])))),
        );
        assert_eq!(e.eval(&[3.0, -4.0], &mut rng), 5.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(!e.is_stochastic());
    }

    #[test]
    fn noise_terms_respect_their_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = Expr::Uniform(Box::new(Expr::Num(2.0)), Box::new(Expr::Var(0)));
        for _ in 0..1000 {
            let v = u.eval(&[3.0], &mut rng);
            assert!((2.0..3.0).contains(&v));
        }
        let n = Expr::Normal(Box::new(Expr::Num(5.0)), Box::new(Expr::Num(0.0)));
        assert_eq!(n.eval(&[], &mut rng), 5.0);
        assert!(n.is_stochastic());
    }
}
