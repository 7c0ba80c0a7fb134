#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::ingest::parse_corpus;
use smellprobe::CorpusFormat;

fuzz_target!(|data: &[u8]| {
    if let Ok(corpus) = parse_corpus(data, CorpusFormat::Jsonl) {
        for t in &corpus.targets {
            assert!(t.url.starts_with("http://") || t.url.starts_with("https://"));
        }
    }
});
