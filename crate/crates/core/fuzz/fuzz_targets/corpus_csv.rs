#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::ingest::parse_corpus;
use smellprobe::CorpusFormat;

fuzz_target!(|data: &[u8]| {
    let _ = parse_corpus(data, CorpusFormat::Csv);
});
