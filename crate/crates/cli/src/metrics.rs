use serde_json::{Map, Value};

/// Named values in insertion order, written as `key,value` CSV and as JSON.
#[derive(Debug, Default, Clone)]
pub struct Metrics(Vec<(String, Value)>);

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.0.push((key.to_string(), v.into()));
        self
    }

    pub fn extend(&mut self, other: Metrics) {
        self.0.extend(other.0);
    }

    fn plain(v: &Value) -> String {
        match v {
            Value::String(x) => x.clone(),
            other => other.to_string(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.0 {
            s.push_str(&format!("{k},{}\n", Self::plain(v)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.0.iter().cloned().collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn print(&self) {
        for (k, v) in &self.0 {
            println!("{k:<28} {}", Self::plain(v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_in_both_forms() {
        let mut m = Metrics::new();
        m.put("z", 1).put("a", "lv").put("tv", 0.5);
        assert_eq!(m.to_csv(), "key,value\nz,1\na,lv\ntv,0.5\n");
        let j: Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(j["a"], "lv");
        assert!(m.to_json().find("\"z\"").unwrap() < m.to_json().find("\"a\"").unwrap());
    }
}
