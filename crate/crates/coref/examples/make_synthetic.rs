//! Write a seeded synthetic corpus as JSON lines, for trying out the CLI:
//!
//! ```sh
//! cargo run --example make_synthetic -- corpus.jsonl [seed] [n_docs]
//! ```

use coref::corpus::synthetic::generate_synthetic_corpus;
use coref::corpus::write_documents;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map(String::as_str).unwrap_or("synthetic.jsonl");
    let seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(7);
    let n_docs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(20);
    let split = generate_synthetic_corpus(seed, n_docs, 100, 4);
    write_documents(std::path::Path::new(path), &split.docs).unwrap();
    eprintln!("wrote {} documents to {path}", split.docs.len());
}
