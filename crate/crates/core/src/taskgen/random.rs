//! Small random single-function programs with nested branches and loops,
//! used to compare the data-flow analysis against path enumeration.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct FlowProgramConfig {
    /// Upper bound on statements, nested ones included.
    pub max_stmts: usize,
    pub max_depth: usize,
    /// Only straight-line assignments: no if, loops or early returns.
    pub branch_free: bool,
}

impl Default for FlowProgramConfig {
    fn default() -> Self {
        FlowProgramConfig { max_stmts: 12, max_depth: 2, branch_free: false }
    }
}

const INTS: [&str; 4] = ["a", "b", "c", "d"];

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: FlowProgramConfig,
    budget: usize,
    out: String,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> &'static str {
        INTS.choose(self.rng).unwrap()
    }

    fn cond(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => "flag".into(),
            1 => format!("{} < {}", self.var(), self.var()),
            2 => format!("flag && {} > 0", self.var()),
            _ => format!("!flag || {} == {}", self.var(), self.var()),
        }
    }

    fn simple(&mut self, indent: usize) {
        let pad = "    ".repeat(indent);
        let x = self.var();
        let line = match self.rng.gen_range(0..6) {
            0 => format!("{x} = {} + {};", self.var(), self.var()),
            1 => format!("{x} += {};", self.var()),
            2 => format!("{x}++;"),
            3 => format!("flag = {} > {};", self.var(), self.var()),
            4 => format!("{x} = 1;"),
            _ => format!("{x} = {} * 2;", self.var()),
        };
        self.out.push_str(&format!("{pad}{line}\n"));
    }

    fn stmts(&mut self, indent: usize, depth: usize, want: usize) {
        for _ in 0..want {
            if self.budget == 0 {
                return;
            }
            self.budget -= 1;
            let pad = "    ".repeat(indent);
            let structured = !self.cfg.branch_free && depth < self.cfg.max_depth && self.budget > 0;
            match if structured { self.rng.gen_range(0..9) } else { 0 } {
                0..=3 => self.simple(indent),
                4 | 5 => {
                    let c = self.cond();
                    self.out.push_str(&format!("{pad}if ({c}) {{\n"));
                    let n = self.rng.gen_range(0..3);
                    self.stmts(indent + 1, depth + 1, n);
                    if self.rng.gen_bool(0.5) {
                        self.out.push_str(&format!("{pad}}} else {{\n"));
                        let n = self.rng.gen_range(1..3);
                        self.stmts(indent + 1, depth + 1, n);
                    }
                    self.out.push_str(&format!("{pad}}}\n"));
                }
                6 => {
                    let c = self.cond();
                    self.out.push_str(&format!("{pad}while ({c}) {{\n"));
                    let n = self.rng.gen_range(0..3);
                    self.stmts(indent + 1, depth + 1, n);
                    self.out.push_str(&format!("{pad}}}\n"));
                }
                7 => {
                    let (x, y) = (self.var(), self.var());
                    self.out.push_str(&format!("{pad}for ({x} = 0; {x} < {y}; {x}++) {{\n"));
                    let n = self.rng.gen_range(1..3);
                    self.stmts(indent + 1, depth + 1, n);
                    self.out.push_str(&format!("{pad}}}\n"));
                }
                _ => {
                    let (c, x) = (self.cond(), self.var());
                    self.out.push_str(&format!("{pad}if ({c}) return {x};\n"));
                }
            }
        }
    }
}

/// A checked-by-construction function over int variables `a`..`d` and a
/// bool `flag`.
pub fn random_flow_program<R: Rng>(rng: &mut R, cfg: FlowProgramConfig) -> String {
    let mut g = Gen { rng, cfg, budget: cfg.max_stmts.max(3) - 3, out: String::new() };
    g.out.push_str("int f(int a, int b, bool flag) {\n    int c = a;\n    int d = 0;\n");
    let n = g.budget;
    g.stmts(1, 0, n);
    let x = g.var();
    g.out.push_str(&format!("    return {x};\n}}\n"));
    g.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::TypedProgram;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let src = random_flow_program(&mut rng, FlowProgramConfig::default());
            TypedProgram::from_source(&src, "r").unwrap_or_else(|e| panic!("{e}\n{src}"));
            let src = random_flow_program(&mut rng, FlowProgramConfig { branch_free: true, ..Default::default() });
            assert!(!src.contains("if") && !src.contains("while") && !src.contains("for"));
        }
    }
}
