use nplcs_wasm::{check_json, fixture_text, loss_distribution_json, simulate_json};
use serde_json::Value;

#[test]
fn check_on_fixture() {
    let m = fixture_text("run6").unwrap();
    let v: Value = serde_json::from_str(&check_json(&m, "BUCHI{=1}[fm] from 1 {6}").unwrap()).unwrap();
    assert_eq!(v["answer"], "Yes");
    assert_eq!(v["witness"]["kind"], "RoundRobin");
    assert!(check_json(&m, "OMEGA-FM{=1}[fm] from 1 dsa=x.dsa").unwrap_err().contains("not available"));
}

#[test]
fn simulate_gadget() {
    let m = fixture_text("gadget").unwrap();
    let v: Value = serde_json::from_str(&simulate_json(&m, "stubborn:{out}", "in : \"ab\"", "reach {out}", 1000, 1).unwrap()).unwrap();
    assert!(v["point"].as_f64().unwrap() > 0.99);
    assert!(simulate_json(&m, "file.json", "in", "reach {out}", 10, 1).is_err());
    assert!(simulate_json(&m, "stubborn:{out}", "in", "reach {out}", 0, 1).is_err());
}

#[test]
fn loss_distribution_sums_to_one() {
    let v: Value = serde_json::from_str(&loss_distribution_json("aab", "1/3").unwrap()).unwrap();
    assert_eq!(v["total"], "1");
    let rows = v["outcomes"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let ab = rows.iter().find(|r| r["word"] == "ab").unwrap();
    // two embeddings of ab into aab, one letter lost
    assert_eq!(ab["probability"], "8/27");
    assert!(loss_distribution_json("aab", "3/2").is_err());
}
