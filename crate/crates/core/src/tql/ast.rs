use std::fmt;

use super::abstraction::{Proposition, PropositionSet};

/// A bounded temporal formula. Atoms are kept as names after parsing and
/// resolved to [`Proposition`]s when a catalog is loaded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A = String> {
    True,
    False,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Next(Box<Formula<A>>),
    Finally(u32, Box<Formula<A>>),
    Globally(u32, Box<Formula<A>>),
    Until(u32, Box<Formula<A>>, Box<Formula<A>>),
}

/// Truth of an atom in one trace position.
pub trait Valuation<A> {
    fn holds(&self, atom: &A) -> bool;
}

impl Valuation<Proposition> for PropositionSet {
    fn holds(&self, atom: &Proposition) -> bool {
        self.contains(*atom)
    }
}

impl Valuation<String> for PropositionSet {
    fn holds(&self, atom: &String) -> bool {
        atom.parse().is_ok_and(|p| self.contains(p))
    }
}

impl<A> Formula<A> {
    pub fn atom(a: impl Into<A>) -> Self {
        Formula::Atom(a.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Self, r: Self) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn next(f: Self) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn finally(k: u32, f: Self) -> Self {
        Formula::Finally(k, Box::new(f))
    }

    pub fn globally(k: u32, f: Self) -> Self {
        Formula::Globally(k, Box::new(f))
    }

    pub fn until(k: u32, l: Self, r: Self) -> Self {
        Formula::Until(k, Box::new(l), Box::new(r))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Next(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => {
                1 + f.depth()
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }

    /// Visits every atom, left to right.
    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) | Formula::Next(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => {
                f.collect_atoms(out)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Rewrites atoms, failing on the first atom `f` rejects.
    pub fn try_map_atoms<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(f(a)?),
            Formula::Not(x) => Formula::not(x.try_map_atoms(f)?),
            Formula::Next(x) => Formula::next(x.try_map_atoms(f)?),
            Formula::Finally(k, x) => Formula::finally(*k, x.try_map_atoms(f)?),
            Formula::Globally(k, x) => Formula::globally(*k, x.try_map_atoms(f)?),
            Formula::And(l, r) => Formula::and(l.try_map_atoms(f)?, r.try_map_atoms(f)?),
            Formula::Or(l, r) => Formula::or(l.try_map_atoms(f)?, r.try_map_atoms(f)?),
            Formula::Until(k, l, r) => Formula::until(*k, l.try_map_atoms(f)?, r.try_map_atoms(f)?),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) => 3,
            Formula::Not(_) | Formula::Next(_) | Formula::Finally(..) | Formula::Globally(..) => 4,
            Formula::True | Formula::False | Formula::Atom(_) => 5,
        }
    }
}

impl Formula<String> {
    /// Resolves atom names against the proposition alphabet.
    pub fn resolve(&self) -> Result<Formula<Proposition>, String> {
        self.try_map_atoms(&mut |name: &String| name.parse::<Proposition>().map_err(|_| name.clone()))
    }
}

fn write_child<A: fmt::Display>(f: &mut fmt::Formatter<'_>, child: &Formula<A>, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints in the concrete query syntax with the minimum parentheses needed
/// to reparse to the same tree.
impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => {
                f.write_str("!")?;
                write_child(f, x, 4)
            }
            Formula::Next(x) => {
                f.write_str("X ")?;
                write_child(f, x, 4)
            }
            Formula::Finally(k, x) => {
                write!(f, "F[<={k}] ")?;
                write_child(f, x, 4)
            }
            Formula::Globally(k, x) => {
                write!(f, "G[<={k}] ")?;
                write_child(f, x, 4)
            }
            Formula::Or(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" | ")?;
                write_child(f, r, 2)
            }
            Formula::And(l, r) => {
                write_child(f, l, 2)?;
                f.write_str(" & ")?;
                write_child(f, r, 3)
            }
            Formula::Until(k, l, r) => {
                write_child(f, l, 4)?;
                write!(f, " U[<={k}] ")?;
                write_child(f, r, 4)
            }
        }
    }
}
