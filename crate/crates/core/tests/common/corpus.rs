//! Seeded generator of well-formed snippets with non-canonical formatting.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STATE_IDS: &[&str] = &["mouse", "book", "cup-01", "desk_lamp", "7f3a9c"];

const HAND_WRITTEN: &[&str] = &[
    "if not On(@state(\"mouse\"), @state(\"book\")):\n    play(\"music\")\n",
    "# greet\nif Visible(@state(\"cup-01\")):\n    print('hello')\nelse:\n    print(\"bye\")\n",
    "d = Distance(@state(\"mouse\"), @state(\"book\"))\nif d < 40:\n    notify(\"close\", \"distance \" + \"ok\")\nelif d < 80:\n    print(d)\nelse:\n    play('far')\n",
    "if In(@state(\"cup-01\"), @state(\"book\"), 5) and Visible(@state(\"mouse\")):\n  open_url(\"https://example.com\")\n",
    "x = (1 + 2) * 3\ny = x - -4\nif x == 9 and not y != 13:\n    send_email(\"a@b.c\", \"subj\", \"body\")\n",
    "if (Visible(@state(\"book\"))\n        or Visible(@state(\"mouse\"))):\n    play(\"x\")\n",
    "flag = True\nif flag:\n    if Upon(@state('mouse'), @state('book'), 0.75):\n        play(\"a\")\n    else:\n        play(\"b\")\n",
    "n = None\nif n == None:\n    print(\"none\")  # trailing comment\n\n\nprint(\"done\")\n",
];

struct Gen {
    rng: ChaCha8Rng,
    quote_single: bool,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn sp(&mut self) -> &'static str {
        ["", " ", " ", "  "][self.rng.random_range(0..4)]
    }

    fn string(&mut self, body: &str) -> String {
        if self.quote_single && self.rng.random_bool(0.5) {
            format!("'{body}'")
        } else {
            format!("\"{body}\"")
        }
    }

    fn state(&mut self) -> String {
        let id = self.pick(STATE_IDS);
        if self.rng.random_bool(0.3) {
            format!("@state('{id}')")
        } else {
            format!("@state(\"{id}\")")
        }
    }

    fn number(&mut self) -> String {
        match self.rng.random_range(0..3) {
            0 => self.rng.random_range(0..200).to_string(),
            1 => format!("{}.{}", self.rng.random_range(0..50), self.rng.random_range(1..100)),
            _ => format!("{}.0", self.rng.random_range(0..9)),
        }
    }

    fn arith(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.4) {
            return match self.rng.random_range(0..4) {
                0 | 1 => self.number(),
                2 => "x".into(),
                _ => {
                    let (a, b) = (self.state(), self.state());
                    format!("Distance({a},{}{b})", self.sp())
                }
            };
        }
        let op = self.pick(&["+", "-", "*", "/"]);
        let (l, r) = (self.arith(depth - 1), self.arith(depth - 1));
        let (s1, s2) = (self.sp(), self.sp());
        let e = format!("{l}{s1}{op}{s2}{r}");
        match self.rng.random_range(0..5) {
            0 => format!("({e})"),
            1 => format!("-{}", self.arith(0)),
            _ => e,
        }
    }

    fn cond(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.35) {
            return match self.rng.random_range(0..6) {
                0 => {
                    let (a, b) = (self.state(), self.state());
                    if self.rng.random_bool(0.5) {
                        format!("On({a}, {b})")
                    } else {
                        format!("On({a}, {b}, 0.{})", self.rng.random_range(1..10))
                    }
                }
                1 => {
                    let (a, b) = (self.state(), self.state());
                    format!("In({a},{}{b})", self.sp())
                }
                2 => format!("Visible({})", self.state()),
                3 => {
                    let op = self.pick(&["<", "<=", ">", ">=", "==", "!="]);
                    let (l, r) = (self.arith(1), self.arith(1));
                    format!("{l} {op} {r}")
                }
                4 => self.pick(&["True", "False", "flag"]).to_string(),
                _ => {
                    let s = self.string("on");
                    format!("mode == {s}")
                }
            };
        }
        match self.rng.random_range(0..4) {
            0 => format!("not {}", self.cond(depth - 1)),
            1 => format!("({})", self.cond(depth - 1)),
            2 => format!("{} and {}", self.cond(depth - 1), self.cond(depth - 1)),
            _ => format!("{} or {}", self.cond(depth - 1), self.cond(depth - 1)),
        }
    }

    fn action(&mut self) -> String {
        match self.rng.random_range(0..6) {
            0 => format!("play({})", self.string("music")),
            1 => {
                let (t, m) = (self.string("Hi"), self.string("object moved"));
                format!("notify({t},{}{m})", self.sp())
            }
            2 => format!("print({})", self.arith(1)),
            3 => format!("open_url({})", self.string("https://example.org/x?a=1")),
            4 => {
                let (a, b, c) = (self.string("me@example.org"), self.string("s"), self.string("line\\nnext"));
                format!("send_email({a}, {b}, {c})")
            }
            _ => format!("print({} + {})", self.string("n="), self.string("1")),
        }
    }

    fn simple(&mut self) -> String {
        match self.rng.random_range(0..4) {
            0 => format!("x{}={}{}", self.sp(), self.sp(), self.arith(2)),
            1 => format!("flag = {}", self.cond(1)),
            2 => format!("mode = {}", self.string("on")),
            _ => self.action(),
        }
    }

    fn block(&mut self, depth: usize, unit: &str, lines: &mut Vec<String>, budget: usize) {
        let pad = unit.repeat(depth);
        let n = self.rng.random_range(1..=budget.clamp(1, 3));
        for _ in 0..n {
            if depth < 2 && self.rng.random_bool(0.35) {
                self.if_stmt(depth, unit, lines);
            } else {
                let mut line = format!("{pad}{}", self.simple());
                if self.rng.random_bool(0.15) {
                    line.push_str("  # note");
                }
                lines.push(line);
            }
        }
    }

    fn if_stmt(&mut self, depth: usize, unit: &str, lines: &mut Vec<String>) {
        let pad = unit.repeat(depth);
        let c = self.cond(2);
        lines.push(format!("{pad}if {c}{}:", self.sp()));
        self.block(depth + 1, unit, lines, 2);
        for _ in 0..self.rng.random_range(0..3) {
            let c = self.cond(2);
            lines.push(format!("{pad}elif {c}:"));
            self.block(depth + 1, unit, lines, 2);
        }
        if self.rng.random_bool(0.5) {
            lines.push(format!("{pad}else:"));
            self.block(depth + 1, unit, lines, 2);
        }
        if self.rng.random_bool(0.1) {
            lines.push(String::new());
        }
    }

    fn program(&mut self) -> String {
        let unit = *["    ", "  ", "   "].choose(&mut self.rng).unwrap();
        let mut lines = Vec::new();
        if self.rng.random_bool(0.2) {
            lines.push("# generated".to_string());
        }
        if self.rng.random_bool(0.5) {
            lines.push(format!("x = {}", self.arith(1)));
            lines.push("flag = False".into());
            lines.push(format!("mode = {}", self.string("on")));
        }
        self.if_stmt(0, unit, &mut lines);
        if self.rng.random_bool(0.3) {
            self.block(0, unit, &mut lines, 2);
        }
        let mut s = lines.join("\n");
        if self.rng.random_bool(0.8) {
            s.push('\n');
        }
        s
    }
}

/// Non-blank, non-comment lines.
pub fn code_lines(src: &str) -> usize {
    src.lines()
        .filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .count()
}

/// At least `n` generated scripts (3 to 16 code lines, each containing an if
/// statement) plus the hand-written ones.
pub fn corpus(seed: u64, n: usize) -> Vec<String> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        quote_single: true,
    };
    let mut out: Vec<String> = HAND_WRITTEN.iter().map(|s| s.to_string()).collect();
    let mut generated = 0;
    while generated < n {
        g.quote_single = g.rng.random_bool(0.5);
        let p = g.program();
        if (3..=16).contains(&code_lines(&p)) {
            out.push(p);
            generated += 1;
        }
    }
    out
}

/// Malformed snippets with the 1-based (line, col) their error must report.
pub const MALFORMED: &[(&str, usize, usize)] = &[
    ("if x > 1\n    play(\"a\")\n", 1, 9),
    ("x = (1 + 2\n", 2, 1),
    ("play(\"unterminated)\n", 1, 6),
    ("if True:\nplay(\"a\")\n", 2, 1),
    ("x = 1\n    y = 2\n", 2, 1),
    ("for i in x:\n    play(\"a\")\n", 1, 1),
    ("x = @state(\"\")\n", 1, 5),
    ("x = 1 $ 2\n", 1, 7),
    ("if True:\n\tplay(\"a\")\n", 2, 1),
    ("x = 1 < 2 < 3\n", 1, 11),
    ("else:\n    play(\"a\")\n", 1, 1),
    ("print(1,)\n", 1, 9),
    ("x = \n", 1, 5),
];
