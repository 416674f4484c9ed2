//! Emission of schedule trees: remapped statements, loop nests and pfor
//! bands lowered onto `amphc_rt` tasks.

use std::collections::{BTreeMap, BTreeSet};

use super::loops::pad;
use super::py::Spelling;
use super::remap::remap;
use super::vector::atom;
use super::Options;
use crate::frontend::ast::{Stmt, StmtKind};
use crate::frontend::Diagnostic;
use crate::kb::{resolve_call, KnowledgeBase};
use crate::polyset::AffineExpr;
use crate::scheduler::{Node, Pfor};
use crate::scop::{Scop, ScopKind, ScopStatement};

pub struct Emitter<'a> {
    pub scop: &'a Scop,
    pub kb: &'a KnowledgeBase,
    pub opts: &'a Options,
    pub function: String,
    pub sp: Spelling,
    /// Task mode: dimension 0 is the chunk `__lo..__hi`.
    pub chunk: bool,
    pub temps: usize,
    pub out: String,
    /// Module-level task functions, in emission order.
    pub tasks: Vec<String>,
    /// Task functions already emitted for earlier functions of the file.
    pub task_base: usize,
    /// Statement emitted elsewhere (the hoisted docstring).
    pub skip: Option<usize>,
    pub diags: Vec<Diagnostic>,
    pub remaps: usize,
    pub pfors: usize,
}

fn first_stmt(ns: &[Node]) -> Option<usize> {
    ns.iter().find_map(|n| match n {
        Node::Stmt(id) => Some(*id),
        Node::Loop { body, .. } => first_stmt(body),
        Node::Pfor(p) => p.members.first().copied(),
    })
}

fn stmt_exprs(s: &Stmt, f: &mut dyn FnMut(&crate::frontend::ast::Expr)) {
    match &s.kind {
        StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
            target.walk(f);
            value.walk(f);
        }
        StmtKind::ExprCall(e) => e.walk(f),
        StmtKind::For { body, .. } => body.iter().for_each(|b| stmt_exprs(b, f)),
        StmtKind::If { cond, body, orelse } => {
            cond.walk(f);
            body.iter().chain(orelse).for_each(|b| stmt_exprs(b, f));
        }
        _ => {}
    }
}

/// Every library call in the statement may run on the device module.
pub fn transferable(s: &Stmt, kb: &KnowledgeBase) -> bool {
    let mut ok = true;
    stmt_exprs(s, &mut |e| {
        if let Some(site) = resolve_call(e) {
            let tys: Vec<_> = site.args.iter().map(|a| a.ty.clone()).collect();
            if let Some(entry) = kb.lookup_site(&site, &tys) {
                ok &= entry.def.backend_transferable;
            }
        }
    });
    ok
}

fn symbols_of(s: &ScopStatement, out: &mut BTreeSet<String>) {
    let mut add = |e: &AffineExpr| out.extend(e.symbols().map(str::to_string));
    for d in &s.domain.disjuncts {
        d.iter().for_each(|c| add(&c.expr));
    }
    for a in s.writes.iter().chain(&s.reads) {
        a.index.iter().for_each(&mut add);
        for l in &a.locals {
            add(&l.lo);
            add(&l.hi);
        }
    }
    for (lo, hi) in &s.bounds {
        add(lo);
        add(hi);
    }
    if let Some(sem) = &s.sem {
        sem.visit(&mut |x| match x {
            crate::sem::Sem::Affine(e) => add(e),
            crate::sem::Sem::Reduce { lo, hi, .. } | crate::sem::Sem::Row { lo, hi, .. } => {
                add(lo);
                add(hi);
            }
            _ => {}
        });
    }
}

impl<'a> Emitter<'a> {
    pub fn new(scop: &'a Scop, kb: &'a KnowledgeBase, opts: &'a Options, function: &str, sp: Spelling) -> Self {
        Emitter {
            scop,
            kb,
            opts,
            function: function.to_string(),
            sp,
            chunk: false,
            temps: 0,
            out: String::new(),
            tasks: Vec::new(),
            task_base: 0,
            skip: None,
            diags: Vec::new(),
            remaps: 0,
            pfors: 0,
        }
    }

    pub fn line(&mut self, l: String) {
        self.out.push_str(&l);
        self.out.push('\n');
    }

    pub fn nodes(&mut self, ns: &[Node], covered: usize, indent: usize) -> Option<()> {
        for n in ns {
            match n {
                Node::Stmt(id) => self.stmt(*id, covered, indent)?,
                Node::Loop { depth, body, .. } => {
                    let s = self.scop.statement(first_stmt(body)?);
                    let inner = self.open_loops(s, covered, depth + 1, indent)?;
                    self.nodes(body, depth + 1, inner)?;
                }
                Node::Pfor(p) if covered == 0 && !self.chunk => self.pfor(p, indent)?,
                Node::Pfor(_) => return None,
            }
        }
        Some(())
    }

    fn stmt(&mut self, id: usize, covered: usize, indent: usize) -> Option<()> {
        if self.skip == Some(id) {
            return Some(());
        }
        let s = self.scop.statement(id);
        if s.dims() > covered && s.kind != ScopKind::BlackBox {
            if let Some(r) = remap(self.scop, s, covered, &self.sp, self.chunk, &mut self.temps) {
                for l in r.lines {
                    self.line(format!("{}{l}", pad(indent)));
                }
                self.remaps += 1;
                return Some(());
            }
        }
        if self.chunk && covered == 0 && s.explicit == 0 {
            return None;
        }
        self.stmt_loops(s, covered, indent)
    }

    fn pfor(&mut self, p: &Pfor, indent: usize) -> Option<()> {
        let mark = self.out.len();
        match self.try_pfor(p, indent) {
            Some(()) => Some(()),
            None => {
                self.out.truncate(mark);
                let s = self.scop.statement(p.members[0]);
                let (line, col) = (s.original.origin.line, s.original.origin.col);
                self.diags.push(Diagnostic::warning(line, col, "parallel band not lowered to tasks; emitted sequentially"));
                self.nodes(&p.body, 0, indent)
            }
        }
    }

    fn try_pfor(&mut self, p: &Pfor, indent: usize) -> Option<()> {
        let members: Vec<&ScopStatement> = p.members.iter().map(|&m| self.scop.statement(m)).collect();
        let (lo0, hi0) = self.dim_bounds(members[0], 0)?;
        let i0 = AffineExpr::var("i0");

        // Offset of each output's first index from the band iterator.
        let mut offsets: BTreeMap<String, i64> = BTreeMap::new();
        for s in &members {
            for w in &s.writes {
                let c = w.index.first()?.sub(&i0).as_constant()?;
                if *offsets.entry(w.array.clone()).or_insert(c) != c {
                    return None;
                }
            }
        }
        let transfer = p.transfer && members.iter().all(|s| transferable(&s.original, self.kb));

        let mut arrays: BTreeSet<String> = BTreeSet::new();
        let mut scalars: BTreeSet<String> = BTreeSet::new();
        let mut syms = BTreeSet::new();
        for s in &members {
            for a in s.writes.iter().chain(&s.reads) {
                if a.whole || !a.index.is_empty() {
                    arrays.insert(a.array.clone());
                } else {
                    scalars.insert(a.array.clone());
                }
            }
            symbols_of(s, &mut syms);
        }
        for prm in self.scop.params.iter().filter(|p| syms.contains(*p)) {
            match prm.split_once(".shape[") {
                Some((root, _)) => {
                    arrays.insert(root.to_string());
                }
                None => {
                    scalars.insert(prm.clone());
                }
            }
        }
        scalars.retain(|s| !arrays.contains(s));

        let module = if transfer { "xp" } else { "np" };
        let mut tsp = self.sp.clone();
        tsp.iters.clear();
        tsp.flatten_self = true;
        tsp.module = module.to_string();

        let k = self.task_base + self.tasks.len();
        let name = format!("_loomc_pfor_{}_{k}", self.function);
        let mut params = vec!["__use_gpu".to_string(), "__lo".into(), "__hi".into()];
        let mut args = Vec::new();
        for a in &arrays {
            params.push(tsp.array(a));
            args.push(self.sp.array(a));
        }
        for s in &scalars {
            params.push(tsp.symbol(s));
            args.push(self.sp.symbol(s));
        }

        // Task function.
        let mut sub = Emitter::new(self.scop, self.kb, self.opts, &self.function, tsp.clone());
        sub.chunk = true;
        sub.temps = self.temps;
        sub.line(format!("def {name}({}):", params.join(", ")));
        if transfer {
            sub.line("    xp = amphc_rt.get_xp(__use_gpu)".into());
        }
        for a in &arrays {
            let v = tsp.array(a);
            if p.output.contains(a) {
                sub.line(format!("    {v} = {module}.array({v})"));
            } else if transfer {
                sub.line(format!("    {v} = xp.asarray({v})"));
            }
        }
        sub.nodes(&p.body, 0, 1)?;
        let slices: Vec<String> = offsets
            .iter()
            .map(|(o, c)| {
                let lo = tsp.affine(&AffineExpr::var("__lo").add_const(*c));
                let hi = tsp.affine(&AffineExpr::var("__hi").add_const(*c));
                format!("{}[{lo}:{hi}]", tsp.array(o))
            })
            .collect();
        let comma = if slices.len() == 1 { "," } else { "" };
        sub.line(format!("    __out = ({}{comma})", slices.join(", ")));
        if transfer {
            sub.line("    if xp is not np:".into());
            sub.line("        __out = tuple(__a.get() for __a in __out)".into());
        }
        sub.line("    return __out".into());

        // Driver, then the sequential twin.
        let set = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        let trip_e = hi0.sub(&lo0);
        let trip = atom(&self.sp.affine(&trip_e));
        let tpar = self.opts.tpar;
        let pd = pad(indent);
        let (lo_t, hi_t) = (self.sp.affine(&lo0), self.sp.affine(&hi0));
        let mut driver = Vec::new();
        driver.push(format!(
            "# pfor(output={{{}}}, input={{{}}}, transfer={})",
            set(&p.output),
            set(&p.input),
            if transfer { "cupy" } else { "none" }
        ));
        let gpu = if transfer && self.opts.enable_gpu { "cp is not None" } else { "False" };
        driver.push(format!("__use_gpu = {gpu}"));
        driver.push(match self.opts.ntasks {
            Some(n) => format!("__nt = {n}"),
            None => "__nt = amphc_rt.num_workers()".into(),
        });
        driver.push(format!("__step = max(1, -(-{trip} // __nt))"));
        driver.push(format!("__chunks = [(__c, min(__c + __step, {hi_t})) for __c in range({lo_t}, {hi_t}, __step)]"));
        let call_args = if args.is_empty() { String::new() } else { format!(", {}", args.join(", ")) };
        driver.push(format!("__hs = [amphc_rt.submit({name}, __use_gpu, __c, __e{call_args}) for __c, __e in __chunks]"));
        driver.push("for (__c, __e), __r in zip(__chunks, amphc_rt.get(__hs)):".into());
        for (n, (o, c)) in offsets.iter().enumerate() {
            let lo = self.sp.affine(&AffineExpr::var("__c").add_const(*c));
            let hi = self.sp.affine(&AffineExpr::var("__e").add_const(*c));
            driver.push(format!("    {}[{lo}:{hi}] = __r[{n}]", self.sp.array(o)));
        }

        match trip_e.as_constant() {
            Some(t) if t >= tpar as i64 => {
                for l in driver {
                    self.line(format!("{pd}{l}"));
                }
            }
            Some(_) => return self.nodes(&p.body, 0, indent),
            None => {
                self.line(format!("{pd}if {trip} >= {tpar}:"));
                for l in driver {
                    self.line(format!("{pd}    {l}"));
                }
                self.line(format!("{pd}else:"));
                self.nodes(&p.body, 0, indent + 1)?;
            }
        }
        self.temps = self.temps.max(sub.temps);
        self.remaps += sub.remaps;
        self.tasks.push(sub.out);
        self.pfors += 1;
        Some(())
    }
}
