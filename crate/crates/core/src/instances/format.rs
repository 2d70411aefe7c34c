//! JSON files for instances, allocations, outcomes and traces.
//!
//! Rationals are strings `"p"` or `"p/q"` (plain JSON integers are also
//! accepted on input); item sets are arrays of item indices. Every document
//! carries `"format": 1`.
//!
//! ```json
//! {"format": 1, "name": "fig1a", "m": 4,
//!  "agents": [{"family": "budget_additive", "budget": "3",
//!              "item_values": ["1", "4", "0", "0"]}],
//!  "uniform_item_values": ["1", "4", "2", "2"],
//!  "metadata": {"item_names": [], "agent_names": [], "params": {}}}
//! ```
//!
//! Agent families: `additive {item_values}`, `single_minded {desired,
//! value}`, `superadditive_explicit {table}`, `budget_additive {budget,
//! item_values}`, `capped_additive {item_values, cap}`.
//!
//! Outcomes: `{"format": 1, "allocation": {"x0": [..], "x": [[..], ..]},
//! "prices": {"x0": "0", "agents": ["3", null, ..]}}`, where `x0` is present
//! exactly when the unallocated set is nonempty and `null` marks an empty
//! bundle; or `"prices": {"items": [..]}` for item prices.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::market::{Allocation, Instance, ItemSet, Metadata, Outcome, Prices, MAX_ITEMS};
use crate::mechanisms::MechanismTrace;
use crate::rational::{format_rat, parse_rat, Rat};
use crate::valuation::Valuation;

pub const FORMAT_VERSION: u64 = 1;

fn rat_value(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

fn rats_value(rs: &[Rat]) -> Value {
    Value::Array(rs.iter().map(rat_value).collect())
}

fn items_value(s: ItemSet) -> Value {
    Value::Array(s.iter().map(|j| json!(j)).collect())
}

fn render(doc: Value) -> String {
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}

fn valuation_value(v: &Valuation) -> Value {
    match v {
        Valuation::Additive { item_values } => json!({
            "family": "additive",
            "item_values": rats_value(item_values),
        }),
        Valuation::SingleMinded { desired, value } => json!({
            "family": "single_minded",
            "desired": items_value(*desired),
            "value": rat_value(value),
        }),
        Valuation::SuperadditiveExplicit { table } => json!({
            "family": "superadditive_explicit",
            "table": rats_value(table),
        }),
        Valuation::BudgetAdditive {
            budget,
            item_values,
        } => json!({
            "family": "budget_additive",
            "budget": rat_value(budget),
            "item_values": rats_value(item_values),
        }),
        Valuation::CappedAdditive { item_values, cap } => json!({
            "family": "capped_additive",
            "item_values": rats_value(item_values),
            "cap": cap,
        }),
    }
}

pub fn write_instance(instance: &Instance) -> String {
    let mut doc = Map::new();
    doc.insert("format".into(), json!(FORMAT_VERSION));
    doc.insert("name".into(), json!(instance.name()));
    doc.insert("m".into(), json!(instance.m()));
    doc.insert(
        "agents".into(),
        Value::Array(instance.agents().iter().map(valuation_value).collect()),
    );
    if let Some(values) = instance.uniform_item_values() {
        doc.insert("uniform_item_values".into(), rats_value(values));
    }
    let meta = instance.metadata();
    if *meta != Metadata::default() {
        doc.insert(
            "metadata".into(),
            json!({
                "item_names": meta.item_names,
                "agent_names": meta.agent_names,
                "params": meta.params,
            }),
        );
    }
    render(Value::Object(doc))
}

fn allocation_value(x: &Allocation) -> Value {
    json!({
        "x0": items_value(x.unallocated()),
        "x": x.bundles().iter().map(|b| items_value(*b)).collect::<Vec<_>>(),
    })
}

pub fn write_allocation(x: &Allocation) -> String {
    render(json!({"format": FORMAT_VERSION, "allocation": allocation_value(x)}))
}

pub fn write_outcome(outcome: &Outcome) -> String {
    let prices = match outcome.prices() {
        Prices::Bundles {
            agents,
            unallocated,
        } => {
            let mut p = Map::new();
            if let Some(q) = unallocated {
                p.insert("x0".into(), rat_value(q));
            }
            p.insert(
                "agents".into(),
                Value::Array(
                    agents
                        .iter()
                        .map(|a| a.as_ref().map_or(Value::Null, rat_value))
                        .collect(),
                ),
            );
            Value::Object(p)
        }
        Prices::Items(items) => json!({ "items": rats_value(items) }),
    };
    render(json!({
        "format": FORMAT_VERSION,
        "allocation": allocation_value(outcome.allocation()),
        "prices": prices,
    }))
}

pub fn write_trace(trace: &MechanismTrace) -> String {
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .map(|s| {
            json!({
                "phase": s.phase,
                "agent": s.agent,
                "items": items_value(s.items),
                "welfare_before": rat_value(&s.welfare_before),
                "welfare_after": rat_value(&s.welfare_after),
            })
        })
        .collect();
    render(json!({
        "format": FORMAT_VERSION,
        "mechanism": trace.mechanism.name(),
        "initial": allocation_value(&trace.initial),
        "steps": steps,
    }))
}

/// A JSON value together with its path in the document, for error
/// locations.
#[derive(Clone, Copy)]
struct At<'a> {
    value: &'a Value,
    path: &'a str,
}

fn fail<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::parse(
        if path.is_empty() { "document" } else { path },
        message,
    ))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl<'a> At<'a> {
    fn object(self, allowed: &[&str]) -> Result<&'a Map<String, Value>> {
        let Some(obj) = self.value.as_object() else {
            return fail(self.path, "expected an object");
        };
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return fail(&join(self.path, k), "unknown field");
        }
        Ok(obj)
    }

    fn usize(self) -> Result<usize> {
        match self.value.as_u64() {
            Some(u) => Ok(u as usize),
            None => fail(self.path, "expected a nonnegative integer"),
        }
    }

    fn str(self) -> Result<&'a str> {
        match self.value.as_str() {
            Some(s) => Ok(s),
            None => fail(self.path, "expected a string"),
        }
    }

    fn rat(self) -> Result<Rat> {
        let text = match self.value {
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
            _ => return fail(self.path, "expected a rational string \"p\" or \"p/q\""),
        };
        parse_rat(&text).or_else(|e| fail(self.path, e))
    }

    fn array(self) -> Result<&'a [Value]> {
        match self.value.as_array() {
            Some(a) => Ok(a),
            None => fail(self.path, "expected an array"),
        }
    }

    fn rats(self) -> Result<Vec<Rat>> {
        self.array()?
            .iter()
            .enumerate()
            .map(|(k, v)| {
                At {
                    value: v,
                    path: &format!("{}[{k}]", self.path),
                }
                .rat()
            })
            .collect()
    }

    fn strings(self) -> Result<Vec<String>> {
        self.array()?
            .iter()
            .enumerate()
            .map(|(k, v)| match v.as_str() {
                Some(s) => Ok(s.to_string()),
                None => fail(&format!("{}[{k}]", self.path), "expected a string"),
            })
            .collect()
    }

    fn items(self) -> Result<ItemSet> {
        let mut set = ItemSet::EMPTY;
        for (k, v) in self.array()?.iter().enumerate() {
            let path = format!("{}[{k}]", self.path);
            let j = At {
                value: v,
                path: &path,
            }
            .usize()?;
            if j >= MAX_ITEMS {
                return fail(&path, format!("item {j} is out of range"));
            }
            if set.contains(j) {
                return fail(&path, format!("item {j} is listed twice"));
            }
            set.insert(j);
        }
        Ok(set)
    }
}

fn field<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<(&'a Value, String)> {
    let path = join(parent, key);
    match obj.get(key) {
        Some(v) => Ok((v, path)),
        None => fail(&path, "missing field"),
    }
}

fn document(text: &str) -> Result<Value> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let Some(obj) = doc.as_object() else {
        return fail("", "expected a JSON object");
    };
    let version = match obj.get("format") {
        Some(v) => At {
            value: v,
            path: "format",
        }
        .usize()?,
        None => return fail("format", "missing field"),
    };
    if version as u64 != FORMAT_VERSION {
        return fail("format", format!("unsupported format version {version}"));
    }
    Ok(doc)
}

fn parse_valuation(value: &Value, path: &str) -> Result<Valuation> {
    let probe = value
        .as_object()
        .ok_or_else(|| Error::parse(path, "expected an object"))?;
    let (fam, fam_path) = field(probe, path, "family")?;
    let family = At {
        value: fam,
        path: &fam_path,
    }
    .str()?;
    let allowed: &[&str] = match family {
        "additive" => &["family", "item_values"],
        "single_minded" => &["family", "desired", "value"],
        "superadditive_explicit" => &["family", "table"],
        "budget_additive" => &["family", "budget", "item_values"],
        "capped_additive" => &["family", "item_values", "cap"],
        other => return fail(&fam_path, format!("unknown valuation family {other:?}")),
    };
    let obj = At { value, path }.object(allowed)?;
    let get = |key: &str| -> Result<(Value, String)> {
        let (v, p) = field(obj, path, key)?;
        Ok((v.clone(), p))
    };
    let rats = |key: &str| -> Result<Vec<Rat>> {
        let (v, p) = get(key)?;
        At {
            value: &v,
            path: &p,
        }
        .rats()
    };
    let one = |key: &str| -> Result<Rat> {
        let (v, p) = get(key)?;
        At {
            value: &v,
            path: &p,
        }
        .rat()
    };
    Ok(match family {
        "additive" => Valuation::Additive {
            item_values: rats("item_values")?,
        },
        "single_minded" => {
            let (v, p) = get("desired")?;
            Valuation::SingleMinded {
                desired: At {
                    value: &v,
                    path: &p,
                }
                .items()?,
                value: one("value")?,
            }
        }
        "superadditive_explicit" => Valuation::SuperadditiveExplicit {
            table: rats("table")?,
        },
        "budget_additive" => Valuation::BudgetAdditive {
            budget: one("budget")?,
            item_values: rats("item_values")?,
        },
        "capped_additive" => {
            let (v, p) = get("cap")?;
            Valuation::CappedAdditive {
                item_values: rats("item_values")?,
                cap: At {
                    value: &v,
                    path: &p,
                }
                .usize()?,
            }
        }
        _ => unreachable!(),
    })
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc = document(text)?;
    let obj = At {
        value: &doc,
        path: "",
    }
    .object(&[
        "format",
        "name",
        "m",
        "agents",
        "uniform_item_values",
        "metadata",
    ])?;
    let (v, p) = field(obj, "", "name")?;
    let name = At { value: v, path: &p }.str()?.to_string();
    let (v, p) = field(obj, "", "m")?;
    let m = At { value: v, path: &p }.usize()?;
    let (v, p) = field(obj, "", "agents")?;
    let agents = At { value: v, path: &p }
        .array()?
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let path = format!("agents[{i}]");
            let val = parse_valuation(a, &path)?;
            val.validate(m)
                .map_err(|e| Error::parse(path.as_str(), e.to_string()))?;
            Ok(val)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut instance =
        Instance::new(name, m, agents).map_err(|e| Error::parse("document", e.to_string()))?;
    if let Some(v) = obj.get("uniform_item_values") {
        let values = At {
            value: v,
            path: "uniform_item_values",
        }
        .rats()?;
        instance = instance
            .with_uniform_item_values(values)
            .map_err(|e| Error::parse("uniform_item_values", e.to_string()))?;
    }
    if let Some(v) = obj.get("metadata") {
        let meta = At {
            value: v,
            path: "metadata",
        }
        .object(&["item_names", "agent_names", "params"])?;
        let mut metadata = Metadata::default();
        if let Some(v) = meta.get("item_names") {
            metadata.item_names = At {
                value: v,
                path: "metadata.item_names",
            }
            .strings()?;
        }
        if let Some(v) = meta.get("agent_names") {
            metadata.agent_names = At {
                value: v,
                path: "metadata.agent_names",
            }
            .strings()?;
        }
        if let Some(v) = meta.get("params") {
            let params = v
                .as_object()
                .ok_or_else(|| Error::parse("metadata.params", "expected an object"))?;
            for (k, val) in params {
                let path = format!("metadata.params.{k}");
                let s = At {
                    value: val,
                    path: &path,
                }
                .str()?;
                metadata.params.insert(k.clone(), s.to_string());
            }
        }
        instance = instance.with_metadata(metadata);
    }
    Ok(instance)
}

fn parse_allocation_value(value: &Value) -> Result<Allocation> {
    let obj = At {
        value,
        path: "allocation",
    }
    .object(&["x0", "x"])?;
    let (v, p) = field(obj, "allocation", "x0")?;
    let x0 = At { value: v, path: &p }.items()?;
    let (v, p) = field(obj, "allocation", "x")?;
    let bundles = At { value: v, path: &p }
        .array()?
        .iter()
        .enumerate()
        .map(|(i, b)| {
            At {
                value: b,
                path: &format!("allocation.x[{i}]"),
            }
            .items()
        })
        .collect::<Result<Vec<_>>>()?;
    if bundles.is_empty() {
        return fail("allocation.x", "at least one agent bundle is required");
    }
    let all = bundles.iter().fold(x0, |acc, b| acc.union(*b));
    let m = 32 - all.bits().leading_zeros() as usize;
    if m == 0 || all != ItemSet::full(m) {
        return fail(
            "allocation",
            format!("listed items {all} do not cover 0..m for any m"),
        );
    }
    Allocation::with_unallocated(m, x0, bundles)
        .map_err(|e| Error::parse("allocation", e.to_string()))
}

/// The `"allocation"` of an allocation or outcome document.
pub fn parse_allocation(text: &str) -> Result<Allocation> {
    let doc = document(text)?;
    let obj = At {
        value: &doc,
        path: "",
    }
    .object(&["format", "allocation", "prices"])?;
    let (v, _) = field(obj, "", "allocation")?;
    parse_allocation_value(v)
}

pub fn parse_outcome(text: &str) -> Result<Outcome> {
    let doc = document(text)?;
    let obj = At {
        value: &doc,
        path: "",
    }
    .object(&["format", "allocation", "prices"])?;
    let (v, _) = field(obj, "", "allocation")?;
    let allocation = parse_allocation_value(v)?;
    let (v, _) = field(obj, "", "prices")?;
    let pobj = At {
        value: v,
        path: "prices",
    }
    .object(&["x0", "agents", "items"])?;
    let prices = if let Some(items) = pobj.get("items") {
        if pobj.len() != 1 {
            return fail("prices", "item prices exclude \"x0\" and \"agents\"");
        }
        Prices::Items(
            At {
                value: items,
                path: "prices.items",
            }
            .rats()?,
        )
    } else {
        let (v, p) = field(pobj, "prices", "agents")?;
        let agents = At { value: v, path: &p }
            .array()?
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                Value::Null => Ok(None),
                _ => At {
                    value: a,
                    path: &format!("prices.agents[{i}]"),
                }
                .rat()
                .map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        let unallocated = pobj
            .get("x0")
            .map(|v| {
                At {
                    value: v,
                    path: "prices.x0",
                }
                .rat()
            })
            .transpose()?;
        Prices::Bundles {
            agents,
            unallocated,
        }
    };
    Outcome::new(allocation, prices).map_err(|e| Error::parse("prices", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{corpus, random_superadditive, random_uniform_budget_additive};
    use crate::rational::int;

    #[test]
    fn corpus_round_trips() {
        for inst in corpus() {
            let text = write_instance(&inst);
            assert_eq!(parse_instance(&text).unwrap(), inst, "{}", inst.name());
            assert_eq!(write_instance(&parse_instance(&text).unwrap()), text);
        }
        let inst = random_superadditive(3, 2, 5).unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
        let inst = random_uniform_budget_additive(4, 3, true, 5).unwrap();
        assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn bad_rational_is_located() {
        let text = r#"{"format": 1, "name": "x", "m": 1,
            "agents": [{"family": "additive", "item_values": ["1/0"]}]}"#;
        match parse_instance(text) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "agents[0].item_values[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse_instance("{\n  \"format\": 1,\n  oops\n}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 3")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_and_unknown_fields() {
        assert!(parse_instance(r#"{"format": 2, "name": "x", "m": 1, "agents": []}"#).is_err());
        let text = r#"{"format": 1, "name": "x", "m": 1, "agnets": []}"#;
        match parse_instance(text) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "agnets"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outcome_price_count_mismatch() {
        let text = r#"{"format": 1, "allocation": {"x0": [], "x": [[0], [1]]},
            "prices": {"agents": ["1"]}}"#;
        assert!(matches!(parse_outcome(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn outcome_round_trip() {
        let x = Allocation::new(3, vec![ItemSet(0b001), ItemSet::EMPTY]).unwrap();
        let out = Outcome::new(
            x.clone(),
            Prices::Bundles {
                agents: vec![Some(crate::rational::rat(7, 3)), None],
                unallocated: Some(int(0)),
            },
        )
        .unwrap();
        assert_eq!(parse_outcome(&write_outcome(&out)).unwrap(), out);
        let items = Outcome::new(x.clone(), Prices::Items(vec![int(1), int(2), int(0)])).unwrap();
        assert_eq!(parse_outcome(&write_outcome(&items)).unwrap(), items);
        assert_eq!(parse_allocation(&write_allocation(&x)).unwrap(), x);
    }

    #[test]
    fn uncovered_items_are_rejected() {
        let text = r#"{"format": 1, "allocation": {"x0": [], "x": [[0], [2]]}}"#;
        assert!(parse_allocation(text).is_err());
    }
}
