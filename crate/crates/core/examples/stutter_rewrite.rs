//! Show how the seed decides between fragment repeats and restarts.

use emocue::disfluency::{rewrite_stutters_in, seeded_rng, StutterConfig};

fn main() {
    let text = "I, uh, r-recently... M-My wife, she's p-proud of the d-drinking t-tally";
    let cfg = StutterConfig::default();
    for seed in 0..4 {
        let (out, rewrites) = rewrite_stutters_in(text, &cfg, &mut seeded_rng(seed));
        println!("seed {seed}: {out}");
        for rw in rewrites {
            println!("    {}-{} -> {:?}", rw.prefix, rw.word, rw.approach);
        }
    }
}
