use mmphf_core::coloring_lab::*;
use std::time::Instant;
fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let mut lim = FamilyLimits::default();
    if args.len() > 2 { lim.full_enumeration_limit = args[2]; }
    let t = Instant::now();
    let f = min_family_size(args[0], args[1] as u32, lim).unwrap();
    println!("C={} cands={} nodes={} {:?}", f.size, f.candidates, f.nodes, t.elapsed());
}
