//! Small reference machines used by tests, benches and the CLI.

use crate::turing::{parse_tm, TMConfiguration, TMSpec};

/// One tape, no rules: the output is the seed itself.
pub fn trivial_tm() -> TMSpec {
    parse_tm("tapes 1\nblank _\nalphabet 0 1 _\nstates H\nstart H\n").expect("static text")
}

/// Two tapes, no rules: input and output are separate and the output stays blank.
/// The smallest machine the rule-level constructions accept.
pub fn trivial_io_tm() -> TMSpec {
    parse_tm("tapes 2\nblank _\nalphabet 0 1 _\nstates H\nstart H\ninput 0\noutput 1\n")
        .expect("static text")
}

/// Seed `b` written as `r` cells, bit `i` in cell `i`.
pub fn trivial_inputs(r: u32) -> Vec<TMConfiguration> {
    (0..1u32 << r)
        .map(|b| {
            let tape: Vec<u8> = (0..r)
                .map(|i| if (b >> i) & 1 == 1 { b'1' } else { b'0' })
                .collect();
            TMConfiguration::new(0, vec![tape], vec![0])
        })
        .collect()
}

/// Two seed bits, one output bit `b0 OR b1`; the target distribution is `{0: 1/4, 1: 3/4}`.
pub const OR2_TM: &str = "\
# input tape: _ b0 b1 _   (head on the right blank)
# output tape: single cell
tapes 2
blank _
alphabet 0 1 _
states A B P0 P1 Q0 Q1 W0 W1 W2 W3
start A
input 0
output 1
move  A -> B [L,N]
write B [0,_] -> P0 [0,_]
write B [1,_] -> P1 [1,_]
move  P0 -> Q0 [L,N]
move  P1 -> Q1 [L,N]
write Q0 [0,_] -> W0 [0,0]
write Q0 [1,_] -> W1 [1,1]
write Q1 [0,_] -> W2 [0,1]
write Q1 [1,_] -> W3 [1,1]
";

pub fn or2_tm() -> TMSpec {
    parse_tm(OR2_TM).expect("static text")
}

/// The four OR inputs in seed order.
pub fn or2_inputs() -> Vec<TMConfiguration> {
    let a = or2_tm().start();
    (0..4u32)
        .map(|b| {
            let bit = |i: u32| if (b >> i) & 1 == 1 { '1' } else { '0' };
            let tape = format!("_{}{}_", bit(0), bit(1));
            TMConfiguration::from_strs(a, &[&tape, "_"], &[3, 0])
        })
        .collect()
}

/// Input for an arbitrary machine: seed bits on the input tape between blanks,
/// head on the right blank, every other tape a single blank cell.
pub fn standard_inputs(spec: &TMSpec, r: u32, extra_cells: usize) -> Vec<TMConfiguration> {
    let blank = spec.blank();
    (0..1u32 << r)
        .map(|b| {
            let mut tapes = vec![vec![blank; 1 + extra_cells]; spec.tapes()];
            let mut heads = vec![0; spec.tapes()];
            let mut input = vec![blank];
            input.extend((0..r).map(|i| if (b >> i) & 1 == 1 { b'1' } else { b'0' }));
            input.push(blank);
            heads[spec.input_tape()] = r as usize + 1;
            tapes[spec.input_tape()] = input;
            TMConfiguration::new(spec.start(), tapes, heads)
        })
        .collect()
}
