//! Toy APE task: MT drops plural agreement on the noun and the final full
//! stop; PE restores both. SRC is a word-by-word rendering of PE.

use apedit::datapipe::Triple;
use apedit::editops::Sentence;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NUMS: [(&str, &str, bool); 4] = [("one", "ein", false), ("two", "zwei", true), ("three", "drei", true), ("many", "viele", true)];
const ADJS: [(&str, &str); 3] = [("big", "gross"), ("small", "klein"), ("red", "rot")];
// (singular, plural, source singular, source plural)
const NOUNS: [(&str, &str, &str, &str); 6] = [
    ("cat", "cats", "katze", "katzen"),
    ("dog", "dogs", "hund", "hunde"),
    ("bird", "birds", "vogel", "voegel"),
    ("house", "houses", "haus", "haeuser"),
    ("tree", "trees", "baum", "baeume"),
    ("car", "cars", "auto", "autos"),
];
const VERBS: [(&str, &str, &str, &str); 3] = [
    ("sleeps", "sleep", "schlaeft", "schlafen"),
    ("runs", "run", "laeuft", "laufen"),
    ("waits", "wait", "wartet", "warten"),
];

fn join(words: &[&str]) -> Sentence {
    Sentence::parse(&words.join(" "))
}

/// All distinct toy triples in a fixed order.
pub fn all_triples() -> Vec<Triple> {
    let mut out = Vec::new();
    for &(num, snum, plural) in &NUMS {
        for adj in std::iter::once(None).chain(ADJS.iter().map(Some)) {
            for &(sg, pl, ssg, spl) in &NOUNS {
                for &(vsg, vpl, svsg, svpl) in &VERBS {
                    let (noun, snoun) = if plural { (pl, spl) } else { (sg, ssg) };
                    let (verb, sverb) = if plural { (vpl, svpl) } else { (vsg, svsg) };
                    let mut pe = vec![num];
                    let mut src = vec![snum];
                    let mut mt = vec![num];
                    if let Some(&(a, sa)) = adj {
                        pe.push(a);
                        src.push(sa);
                        mt.push(a);
                    }
                    pe.extend([noun, verb, "."]);
                    src.extend([snoun, sverb, "."]);
                    mt.extend([sg, verb]);
                    out.push(Triple {
                        src: join(&src),
                        mt: join(&mt),
                        pe: join(&pe),
                    });
                }
            }
        }
    }
    out
}

/// `n` distinct triples drawn with a fixed seed.
pub fn toy_corpus(n: usize, seed: u64) -> Vec<Triple> {
    let mut all = all_triples();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    all.truncate(n);
    all
}

/// Same sentences, PE equal to MT.
pub fn identity_corpus(n: usize, seed: u64) -> Vec<Triple> {
    toy_corpus(n, seed)
        .into_iter()
        .map(|t| Triple {
            src: t.src,
            mt: t.pe.clone(),
            pe: t.pe,
        })
        .collect()
}
