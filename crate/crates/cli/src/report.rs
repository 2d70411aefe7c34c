//! Line-oriented `key=value` reports.

use std::fmt::{self, Display, Write};

use mccwe_core::equilibria::{VerifyReport, Violation};
use mccwe_core::rational::format_rat;
use mccwe_core::{Allocation, Instance, Rat};
use serde_json::{json, Value};

#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn line(&mut self, key: &str, value: impl Display) -> &mut Self {
        writeln!(self.text, "{key}={value}").expect("writing to a String");
        self
    }

    pub fn rat(&mut self, key: &str, value: &Rat) -> &mut Self {
        self.line(key, format_rat(value))
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// `name` for agent `i`: its metadata name, else its index.
pub fn agent_label(instance: &Instance, i: usize) -> String {
    instance
        .metadata()
        .agent_names
        .get(i)
        .cloned()
        .unwrap_or_else(|| i.to_string())
}

/// `x0={..} a1={..} ...`, skipping empty bundles.
pub struct AllocationView<'a>(pub &'a Instance, pub &'a Allocation);

impl Display for AllocationView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let AllocationView(instance, x) = *self;
        let mut parts = Vec::new();
        if !x.unallocated().is_empty() {
            parts.push(format!("x0={}", x.unallocated()));
        }
        for (i, b) in x.bundles().iter().enumerate() {
            if !b.is_empty() {
                parts.push(format!("{}={b}", agent_label(instance, i)));
            }
        }
        if parts.is_empty() {
            parts.push("empty".into());
        }
        f.write_str(&parts.join(" "))
    }
}

pub fn violation_line(instance: &Instance, v: &Violation) -> String {
    match v {
        Violation::Buyer {
            agent,
            offending,
            offending_items,
            gap,
        } => format!(
            "buyer agent={agent} name={} blocks={offending} items={offending_items} gap={}",
            agent_label(instance, *agent),
            format_rat(gap)
        ),
        Violation::Seller { items, price } => {
            format!("seller items={items} price={}", format_rat(price))
        }
    }
}

pub fn violation_json(instance: &Instance, v: &Violation) -> Value {
    match v {
        Violation::Buyer {
            agent,
            offending,
            offending_items,
            gap,
        } => json!({
            "kind": "buyer",
            "agent": agent,
            "name": agent_label(instance, *agent),
            "blocks": offending.iter().collect::<Vec<_>>(),
            "items": offending_items.iter().collect::<Vec<_>>(),
            "gap": format_rat(gap),
        }),
        Violation::Seller { items, price } => json!({
            "kind": "seller",
            "items": items.iter().collect::<Vec<_>>(),
            "price": format_rat(price),
        }),
    }
}

pub fn verify_json(
    instance: &Instance,
    report: &VerifyReport,
    revenue: &Rat,
    welfare: &Rat,
) -> String {
    let doc = json!({
        "mode": report.mode,
        "ok": report.ok,
        "revenue": format_rat(revenue),
        "welfare": format_rat(welfare),
        "violations": report
            .violations
            .iter()
            .map(|v| violation_json(instance, v))
            .collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}
