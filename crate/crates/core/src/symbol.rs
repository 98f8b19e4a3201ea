//! Interned symbols and pair letters.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

/// Token used for the empty symbol in every text format.
pub const EPS_TOKEN: &str = "<eps>";

struct Interner {
    names: Vec<&'static str>,
    ids: HashMap<&'static str, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        let mut ids = HashMap::new();
        ids.insert(EPS_TOKEN, 0);
        RwLock::new(Interner {
            names: vec![EPS_TOKEN],
            ids,
        })
    })
}

/// An interned input or output symbol. [`Symbol::EPS`] is the empty symbol.
///
/// Equality and hashing are by identity. `Ord` is by identity too, which is
/// deterministic within a process but not alphabetical; code that needs a
/// canonical order sorts by [`Symbol::name`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub const EPS: Symbol = Symbol(0);

    pub fn new(name: &str) -> Symbol {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Symbol(id);
        }
        let mut guard = interner().write().unwrap();
        if let Some(&id) = guard.ids.get(name) {
            return Symbol(id);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = guard.names.len() as u32;
        guard.names.push(leaked);
        guard.ids.insert(leaked, id);
        Symbol(id)
    }

    pub fn name(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }

    pub fn is_eps(self) -> bool {
        self == Symbol::EPS
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One clock tick of a transducer: an (input, output) pair.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub input: Symbol,
    pub output: Symbol,
}

impl Letter {
    /// The `(ε, ε)` stay letter.
    pub const STAY: Letter = Letter {
        input: Symbol::EPS,
        output: Symbol::EPS,
    };

    pub fn new(input: Symbol, output: Symbol) -> Letter {
        Letter { input, output }
    }

    pub fn from_names(input: &str, output: &str) -> Letter {
        Letter::new(Symbol::new(input), Symbol::new(output))
    }

    pub fn is_stay(self) -> bool {
        self == Letter::STAY
    }

    pub fn inverted(self) -> Letter {
        Letter::new(self.output, self.input)
    }

    /// Alphabetical sort key, stable across processes.
    pub fn name_key(self) -> (&'static str, &'static str) {
        (self.input.name(), self.output.name())
    }

    /// Parses `in:out`.
    pub fn parse(token: &str) -> Option<Letter> {
        let (i, o) = token.split_once(':')?;
        if i.is_empty() || o.is_empty() || o.contains(':') {
            return None;
        }
        Some(Letter::from_names(i, o))
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.input, self.output)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.input, self.output)
    }
}

/// Sorts letters alphabetically by `(input name, output name)`.
pub fn sort_letters(letters: &mut [Letter]) {
    letters.sort_by_key(|l| l.name_key());
}
