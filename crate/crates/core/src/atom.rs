//! Atoms: the elements of a state's primitive sets.
//!
//! An atom is identified by its sort and its name. Declared constants carry
//! their literal name; derived atoms are named structurally as
//! `tag(arg1,arg2)`, so two derivations from the same tag and arguments
//! always produce the same atom.

use std::fmt;
use std::sync::Arc;

/// Interned-ish string used for every identifier in the workbench.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// Structural name of a derived atom.
pub fn derived_name<S: AsRef<str>>(tag: &str, args: &[S]) -> Sym {
    let mut out = String::with_capacity(tag.len() + 2 + args.len() * 4);
    out.push_str(tag);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(a.as_ref());
    }
    out.push(')');
    Arc::from(out)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    sort: Sym,
    name: Sym,
}

impl Atom {
    pub fn new(sort: &str, name: &str) -> Self {
        Atom {
            sort: sym(sort),
            name: sym(name),
        }
    }

    pub fn from_syms(sort: Sym, name: Sym) -> Self {
        Atom { sort, name }
    }

    pub fn derived(sort: &str, tag: &str, args: &[&Atom]) -> Self {
        let names: Vec<&str> = args.iter().map(|a| a.name()).collect();
        Atom {
            sort: sym(sort),
            name: derived_name(tag, &names),
        }
    }

    pub fn sort(&self) -> &str {
        &self.sort
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn name_sym(&self) -> &Sym {
        &self.name
    }

    pub fn sort_sym(&self) -> &Sym {
        &self.sort
    }

    /// True when the name has the `tag(...)` shape of a derived atom.
    pub fn is_derived(&self) -> bool {
        self.name.ends_with(')') && self.name.contains('(')
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `name(a,b,...)` rendering shared by ground queries and ground commands.
pub(crate) fn fmt_application(f: &mut fmt::Formatter<'_>, name: &str, args: &[Sym]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(a)?;
    }
    f.write_str(")")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_identity_is_structural() {
        let a = Atom::new("U", "alice");
        let r1 = Atom::derived("R", "role", &[&a]);
        let r2 = Atom::derived("R", "role", &[&Atom::new("U", "alice")]);
        assert_eq!(r1, r2);
        assert_eq!(r1.name(), "role(alice)");
        assert!(r1.is_derived());
        assert!(!a.is_derived());
    }

    #[test]
    fn derived_name_with_several_args() {
        assert_eq!(&*derived_name("pair", &["a", "b"]), "pair(a,b)");
        assert_eq!(&*derived_name::<&str>("unit", &[]), "unit()");
    }

    #[test]
    fn ordering_is_by_sort_then_name() {
        let mut v = [Atom::new("U", "b"), Atom::new("O", "z"), Atom::new("U", "a")];
        v.sort();
        let names: Vec<_> = v.iter().map(|a| format!("{}:{}", a.sort(), a.name())).collect();
        assert_eq!(names, ["O:z", "U:a", "U:b"]);
    }
}
