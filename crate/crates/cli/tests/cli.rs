use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use itertools::Itertools;
use mdsa::descriptor::CodeDescriptor;
use mdsa::verify::{fixtures, Coverage};
use mdsa_cli::build::{cmd_build, BuildOptions, BuildOutcome, LoadedCode};
use mdsa_cli::compare::compare;
use mdsa_cli::config::BuildConfig;
use mdsa_cli::files::{decode_shards, encode_bytes};
use mdsa_cli::repair::repair_shards;
use mdsa_cli::shard::{ShardFile, HEADER_LEN};
use mdsa_cli::verify::{run_suites, DEFAULT_SUITES};
use mdsa_cli::CliError;
use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONFIG: &str = "# (6,3), repair from 4 or 5 helpers\nn=6\nk=3\ndelta0=2\ndegrees=2,3\n";

fn build(text: &str, opts: &BuildOptions) -> Result<BuildOutcome, CliError> {
    cmd_build(&BuildConfig::parse(text)?, opts)
}

fn code() -> &'static LoadedCode {
    static CODE: OnceLock<LoadedCode> = OnceLock::new();
    CODE.get_or_init(|| match build(CONFIG, &BuildOptions::default()).unwrap() {
        BuildOutcome::Built { descriptor, code, .. } => LoadedCode::from_parts(descriptor, code),
        BuildOutcome::ReportOnly { .. } => panic!("small code refused"),
    })
}

fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
    v
}

fn subset(shards: &[ShardFile], nodes: &[usize]) -> Vec<ShardFile> {
    nodes.iter().map(|&i| shards[i].clone()).collect()
}

#[test]
fn build_gives_the_expected_parameters() {
    let code = code().code();
    assert_eq!(code.sub_packetization(), 216);
    assert_eq!(code.field().order(), 32);
    // the descriptor rebuilds the same code
    let again = LoadedCode::parse(&code_text(), false).unwrap();
    assert_eq!(again.digest, self::code().digest);
    for t in 0..3 {
        for i in 0..6 {
            assert_eq!(again.code().block(t, i), code.block(t, i));
        }
    }
}

fn code_text() -> String {
    code().descriptor.to_text()
}

#[test]
fn build_is_deterministic() {
    let a = match build(CONFIG, &BuildOptions::default()).unwrap() {
        BuildOutcome::Built { descriptor, .. } => descriptor.to_text(),
        _ => unreachable!(),
    };
    assert_eq!(a, code_text());
    let b = match build(CONFIG, &BuildOptions { seed: Some(3), ..Default::default() }).unwrap() {
        BuildOutcome::Built { descriptor, .. } => descriptor.to_text(),
        _ => unreachable!(),
    };
    assert_ne!(a, b);
}

#[test]
fn build_rejects_bad_parameters() {
    // largest degree beyond r = 3
    let err = build("n=6\nk=3\ndegrees=2,5\n", &BuildOptions::default()).unwrap_err();
    assert_eq!(err.to_string(), "degree 5 is outside [2, 3]", "{err:?}");
    // r must exceed delta0
    assert!(matches!(build("n=4\nk=2\ndegrees=2\n", &BuildOptions::default()), Err(CliError::Vbk(_))));
    // field below 6 ceil(n/2) + 2 = 20
    assert!(matches!(
        build(CONFIG, &BuildOptions { field: Some(16), ..Default::default() }),
        Err(CliError::Vbk(mdsa::vbk::VbkError::FieldTooSmall { q: 16, need: 20 }))
    ));
}

#[test]
fn preflight_certifies_the_base_code() {
    let opts = BuildOptions {
        preflight: Some(Coverage::Exhaustive),
        ..Default::default()
    };
    let BuildOutcome::Built { preflight, .. } = build(CONFIG, &opts).unwrap() else {
        panic!("refused")
    };
    assert_eq!(preflight.len(), 2 + 3 * 3);
    assert!(preflight.iter().all(|r| r.passed));
}

#[test]
fn flagship_parameters_are_report_only() {
    match build("n=24\nk=20\ndegrees=2,3\n", &BuildOptions::default()).unwrap() {
        BuildOutcome::ReportOnly { summary } => {
            assert_eq!(summary.sub_packetization_power, "6^12");
            assert_eq!(summary.q, 128);
        }
        BuildOutcome::Built { .. } => panic!("built a 6^12 code"),
    }
}

#[test]
fn empty_file() {
    let shards = encode_bytes(code(), &[]).unwrap();
    assert_eq!(shards.len(), 6);
    for s in &shards {
        assert_eq!(s.header.stripes, 1);
        assert_eq!(s.header.original_len, 0);
        assert_eq!(s.symbols.len(), 216);
    }
    assert!(decode_shards(code(), subset(&shards, &[3, 4, 5])).unwrap().is_empty());
}

#[test]
fn every_three_shards_decode() {
    let data = random_bytes(50_000, 1);
    let shards = encode_bytes(code(), &data).unwrap();
    for nodes in (0..6).combinations(3) {
        assert_eq!(decode_shards(code(), subset(&shards, &nodes)).unwrap(), data, "{nodes:?}");
    }
    // shards survive serialization
    let bytes = shards[4].to_bytes();
    assert_eq!(bytes.len(), HEADER_LEN + shards[4].symbols.len());
    assert_eq!(ShardFile::from_bytes(&bytes, "t").unwrap(), shards[4]);
}

#[test]
fn wide_and_prime_fields_round_trip() {
    for q in [1024, 23] {
        let opts = BuildOptions {
            field: Some(q),
            ..Default::default()
        };
        let BuildOutcome::Built { descriptor, code, .. } = build(CONFIG, &opts).unwrap() else {
            panic!("refused")
        };
        let loaded = LoadedCode::from_parts(descriptor, code);
        let data = random_bytes(3000, q as u64);
        let shards = encode_bytes(&loaded, &data).unwrap();
        let width = if q > 256 { 2 } else { 1 };
        assert_eq!(shards[0].to_bytes().len(), HEADER_LEN + shards[0].symbols.len() * width);
        assert_eq!(decode_shards(&loaded, subset(&shards, &[0, 2, 5])).unwrap(), data);
    }
}

#[test]
fn corrupt_payload_is_pinned_on_its_node() {
    let data = random_bytes(20_000, 2);
    let mut shards = encode_bytes(code(), &data).unwrap();
    shards[4].symbols[1000].0 ^= 1;
    let stripe = 1000 / 216;
    match decode_shards(code(), shards.clone()) {
        Err(CliError::CorruptShard { node: 4, stripe: s }) => assert_eq!(s, stripe),
        other => panic!("{other:?}"),
    }
    // also when the bad shard is one of the first k
    let mut shards2 = encode_bytes(code(), &data).unwrap();
    shards2[1].symbols[7].0 ^= 3;
    assert!(matches!(decode_shards(code(), shards2), Err(CliError::CorruptShard { node: 1, stripe: 0 })));
    // with one spare shard the disagreement shows but cannot be pinned
    assert!(matches!(
        decode_shards(code(), subset(&shards, &[0, 1, 2, 4])),
        Err(CliError::Inconsistent { .. })
    ));
}

#[test]
fn damaged_files_are_rejected() {
    let shards = encode_bytes(code(), b"hello").unwrap();
    let mut bytes = shards[2].to_bytes();
    bytes[HEADER_LEN + 3] = 0xFF;
    assert!(matches!(
        ShardFile::from_bytes(&bytes, "x"),
        Err(CliError::SymbolOutOfRange { node: 2, .. })
    ));
    let mut bytes = shards[2].to_bytes();
    bytes[1] = 0;
    assert!(matches!(ShardFile::from_bytes(&bytes, "x"), Err(CliError::Header { .. })));
}

#[test]
fn shard_set_errors() {
    let shards = encode_bytes(code(), b"some bytes").unwrap();
    assert!(matches!(
        decode_shards(code(), subset(&shards, &[0, 5])),
        Err(CliError::TooFewShards { need: 3, got: 2 })
    ));
    assert!(matches!(
        decode_shards(code(), subset(&shards, &[0, 5, 5])),
        Err(CliError::DuplicateNode(5))
    ));
    let mut foreign = shards[3].clone();
    foreign.header.digest[0] ^= 1;
    let mut set = subset(&shards, &[0, 1]);
    set.push(foreign);
    assert!(matches!(decode_shards(code(), set), Err(CliError::DigestMismatch { node: 3 })));
    let mut longer = shards[3].clone();
    longer.header.original_len += 1;
    let mut set = subset(&shards, &[0, 1]);
    set.push(longer);
    assert!(matches!(decode_shards(code(), set), Err(CliError::ShardMismatch { node: 3, .. })));
}

#[test]
fn repair_every_node_at_both_degrees() {
    let data = random_bytes(30_000, 3);
    let shards = encode_bytes(code(), &data).unwrap();
    for node in 0..6 {
        let others: Vec<ShardFile> = shards.iter().filter(|s| s.node() != node).cloned().collect();
        for (d, want) in [(4, "432/432 symbols, optimal access: yes"), (5, "360/360 symbols, optimal access: yes")] {
            let (rebuilt, report) = repair_shards(code(), others.clone(), node, d, None).unwrap();
            assert_eq!(rebuilt, shards[node], "node {node}, d = {d}");
            assert!(report.to_text().contains(want), "{}", report.to_text());
            assert_eq!(report.total_downloaded, report.stripes * report.per_stripe.bound);
            assert_eq!(report.total_accessed, report.total_downloaded);
        }
    }
}

#[test]
fn repair_with_chosen_helpers_and_errors() {
    let shards = encode_bytes(code(), &random_bytes(999, 4)).unwrap();
    let (rebuilt, report) = repair_shards(code(), shards.clone(), 0, 4, Some(&[2, 3, 4, 5])).unwrap();
    assert_eq!(rebuilt, shards[0]);
    assert_eq!(report.helpers, vec![2, 3, 4, 5]);
    assert!(matches!(
        repair_shards(code(), shards.clone(), 0, 3, None),
        Err(CliError::Degree { d: 3, delta: 1, .. })
    ));
    assert!(matches!(
        repair_shards(code(), shards.clone(), 0, 6, None),
        Err(CliError::Degree { d: 6, .. })
    ));
    assert!(matches!(
        repair_shards(code(), subset(&shards, &[1, 2, 3]), 0, 4, None),
        Err(CliError::HelperShortfall { need: 4, got: 3 })
    ));
    assert!(matches!(
        repair_shards(code(), subset(&shards, &[1, 2, 3, 4]), 0, 4, Some(&[1, 2, 3, 5])),
        Err(CliError::MissingHelper(5))
    ));
}

#[test]
fn verify_suite_passes_and_the_zeta_fixture_fails() {
    let reports = run_suites(code(), &DEFAULT_SUITES, &Coverage::auto(0), 0).unwrap();
    assert!(reports.iter().all(|r| r.passed));

    let mut bad = code().descriptor.clone();
    let params = bad.params().unwrap();
    bad.constants = fixtures::zeta_collision(&params, &bad.constants, 2);
    let loaded = LoadedCode::from_descriptor(CodeDescriptor::parse(&bad.to_text()).unwrap(), false).unwrap();
    let reports = run_suites(&loaded, &DEFAULT_SUITES, &Coverage::auto(0), 0).unwrap();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    assert!(failed.contains(&"base/c2"), "{failed:?}");
    let c2 = reports.iter().find(|r| !r.passed).unwrap();
    assert!(c2.counterexample.as_ref().unwrap().contains("node 2"));
}

#[test]
fn sampled_verification_is_reproducible() {
    let cov = Coverage::Sample { count: 4, seed: 11 };
    let a = run_suites(code(), &DEFAULT_SUITES, &cov, 11).unwrap();
    let b = run_suites(code(), &DEFAULT_SUITES, &cov, 11).unwrap();
    assert_eq!(mdsa::verify::render_json_lines(&a), mdsa::verify::render_json_lines(&b));
}

#[test]
fn comparison_rows() {
    let table = |n, k, d0, set: &[usize]| {
        compare(n, k, d0, &[set.to_vec()], true)
            .unwrap()
            .into_iter()
            .map(|r| (r.sub_packetization.to_string(), r.field_size()))
            .collect::<Vec<_>>()
    };
    let s = |a: &str, b: &str| (a.to_string(), b.to_string());
    assert_eq!(
        table(24, 20, 2, &[2, 3]),
        vec![s("6^12", "2^7"), s("6^24", "2^8"), s("6^24", "2^5")]
    );
    assert_eq!(table(24, 19, 3, &[3, 4, 5])[0], s("60^8", "2^8"));
    assert_eq!(table(24, 18, 4, &[4, 5, 6])[0], s("60^6", "2^7"));
    assert_eq!(table(24, 19, 3, &[3, 4, 5])[1], s("60^24", "2^11"));
}

fn mdsa(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mdsa"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn binary_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("c.conf"), CONFIG).unwrap();
    let data = random_bytes(10_000, 5);
    std::fs::write(dir.join("in.bin"), &data).unwrap();

    let (code, _, err) = mdsa(&["build", "--config", "c.conf", "--out", "code.txt"], dir);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("L = 6^3 = 216"), "{err}");
    assert_eq!(mdsa(&["encode", "code.txt", "in.bin", "--out", "sh"], dir).0, 0);
    let original = std::fs::read(dir.join("sh/node-01.shard")).unwrap();
    for n in [1, 3, 4] {
        std::fs::remove_file(dir.join(format!("sh/node-{n:02}.shard"))).unwrap();
    }
    assert_eq!(mdsa(&["decode", "code.txt", "sh", "--out", "out.bin"], dir).0, 0);
    assert_eq!(std::fs::read(dir.join("out.bin")).unwrap(), data);

    // put node 3 and 4 back, then rebuild node 1 from 5 helpers
    std::fs::write(dir.join("enc.keep"), b"").unwrap();
    assert_eq!(mdsa(&["encode", "code.txt", "in.bin", "--out", "full"], dir).0, 0);
    std::fs::remove_file(dir.join("full/node-01.shard")).unwrap();
    let (code, out, err) = mdsa(
        &["repair", "code.txt", "full", "--node", "1", "--degree", "5", "--json-report", "r.json"],
        dir,
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("360/360 symbols, optimal access: yes"), "{out}");
    assert_eq!(std::fs::read(dir.join("full/node-01.shard")).unwrap(), original);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert_eq!(json["per_stripe"]["downloaded"], 360);

    let (code, _, err) = mdsa(&["repair", "code.txt", "full", "--node", "1", "--degree", "3"], dir);
    assert_eq!(code, 2);
    assert!(err.contains("d - k + 1"), "{err}");

    let (code, out, _) = mdsa(&["verify", "code.txt", "--report", "v.txt", "--json-report", "v.json"], dir);
    assert_eq!(code, 0, "{out}");
    assert_eq!(std::fs::read_to_string(dir.join("v.txt")).unwrap(), out);
    assert_eq!(std::fs::read_to_string(dir.join("v.json")).unwrap().lines().count(), out.lines().count());

    // tampered descriptor
    let text = std::fs::read_to_string(dir.join("code.txt")).unwrap();
    std::fs::write(dir.join("bad.txt"), text.replace("seed=0", "seed=1")).unwrap();
    let (code, _, err) = mdsa(&["decode", "bad.txt", "sh", "--out", "x.bin"], dir);
    assert_eq!(code, 2);
    assert!(err.contains("digest mismatch"), "{err}");
}

#[test]
fn binary_verify_fails_on_the_zeta_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = code().descriptor.clone();
    let params = bad.params().unwrap();
    bad.constants = fixtures::zeta_collision(&params, &bad.constants, 0);
    std::fs::write(tmp.path().join("bad.txt"), bad.to_text()).unwrap();
    let (code, out, _) = mdsa(&["verify", "bad.txt", "--suite", "tmds"], tmp.path());
    assert_eq!(code, 1);
    assert!(out.lines().any(|l| l.starts_with("FAIL base/c2") && l.contains("counterexample: node 0")), "{out}");
}

#[test]
fn binary_compare_and_report_only_build() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, _) = mdsa(
        &["compare", "--n", "24", "--k", "20", "--delta0", "2", "--degrees", "2,3", "--degrees", "2,4"],
        tmp.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.starts_with("G ")).count(), 2);
    assert!(out.contains("6^12") && out.contains("4^12"));

    std::fs::write(tmp.path().join("big.conf"), "n=24\nk=20\ndegrees=2,3\n").unwrap();
    let (code, out, err) = mdsa(&["build", "--config", "big.conf"], tmp.path());
    assert_eq!(code, 2);
    assert!(out.contains("6^12") && out.contains("report only"), "{out}");
    assert!(err.contains("--force"), "{err}");
    let (code, out, _) = mdsa(&["build", "--config", "big.conf", "--params-only"], tmp.path());
    assert_eq!(code, 0);
    assert!(out.contains("2176782336"));

    std::fs::write(tmp.path().join("typo.conf"), "n=6\nk=3\ndegree=2,3\n").unwrap();
    let (code, _, err) = mdsa(&["build", "--config", "typo.conf"], tmp.path());
    assert_eq!(code, 2);
    assert!(err.contains("config line 3"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn any_bytes_round_trip(data in proptest::collection::vec(any::<u8>(), 0..2000), drop in 0usize..20) {
        let shards = encode_bytes(code(), &data).unwrap();
        let keep = (0..6).combinations(3).nth(drop).unwrap();
        prop_assert_eq!(decode_shards(code(), subset(&shards, &keep)).unwrap(), data);
    }
}
