//! Score tiles through an external predictor speaking newline-delimited JSON.
//!
//! The example re-launches itself with `--stub` as the predictor: it reads
//! `{"id", "path"}` requests and answers `{"id", "score"}` with the tile's
//! darkness as the score.
//!
//! ```bash
//! cargo run --release --example external_predictor
//! ```

use std::io::{BufRead, Write};

use blurmm::imgcore::{read_pnm, write_pnm};
use blurmm::predict::{external_predict, ExternalSpec, PredictRequest};
use blurmm::rng::{Purpose, RngSpec};
use blurmm::synth::CorpusSpec;

fn stub() {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in std::io::stdin().lock().lines() {
        let req: serde_json::Value = serde_json::from_str(&line.expect("stdin")).expect("request json");
        let raster = read_pnm(req["path"].as_str().expect("path").as_ref()).expect("tile");
        let score = 1.0 - raster.channel_means()[0] / 255.0;
        writeln!(out, "{}", serde_json::json!({"id": req["id"], "score": score})).expect("stdout");
    }
}

fn main() -> blurmm::Result<()> {
    if std::env::args().any(|a| a == "--stub") {
        stub();
        return Ok(());
    }
    let dir = std::env::temp_dir().join("blurmm_external_example");
    let spec = CorpusSpec::default();
    let rng = RngSpec::new(3);
    let mut requests = Vec::new();
    for (i, label) in [0u8, 1, 0, 1].into_iter().enumerate() {
        let tile = spec.render(label, &mut rng.tile_stream("ext", i as u64, Purpose::Texture));
        let path = dir.join(format!("t{i}.pgm"));
        write_pnm(&path, &tile)?;
        requests.push(PredictRequest { id: format!("t{i}"), path });
    }
    let me = std::env::current_exe().expect("current exe");
    let ext = ExternalSpec {
        model_id: "darkness".into(),
        command: vec![me.display().to_string(), "--stub".into()],
    };
    for s in external_predict(&requests, &ext)? {
        println!("{} {:.4}", s.tile_id, s.value);
    }
    Ok(())
}
