//! Timeline export: CSV and the Chrome trace-event JSON format.

use redsea_core::sim::{Resource, Timeline};
use serde_json::{json, Value};

use crate::format::fmt_g;

pub fn timeline_csv(timeline: &Timeline) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task_id", "resource", "start_s", "end_s"]).expect("in-memory write");
    for e in &timeline.events {
        w.write_record([e.task.0.to_string(), e.resource.to_string(), fmt_g(e.start_s), fmt_g(e.end_s)])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn lane(resource: Resource) -> u32 {
    match resource {
        Resource::HostPool(k) => k,
        Resource::DeviceQueue(k) => 1000 + k,
        Resource::LinkH2D => 2000,
        Resource::LinkD2H => 2001,
    }
}

/// Begin/end event pairs, one thread lane per resource, timestamps in microseconds.
pub fn chrome_trace(timeline: &Timeline) -> String {
    let mut lanes: Vec<Resource> = timeline.events.iter().map(|e| e.resource).collect();
    lanes.sort();
    lanes.dedup();
    let mut events: Vec<Value> = lanes
        .iter()
        .map(|r| json!({"name": "thread_name", "ph": "M", "pid": 0, "tid": lane(*r), "args": {"name": r.to_string()}}))
        .collect();
    for e in &timeline.events {
        let tid = lane(e.resource);
        let name = e.task.to_string();
        events.push(json!({"name": name, "ph": "B", "ts": e.start_s * 1e6, "pid": 0, "tid": tid}));
        events.push(json!({"name": name, "ph": "E", "ts": e.end_s * 1e6, "pid": 0, "tid": tid}));
    }
    let mut s = serde_json::to_string_pretty(&json!({"traceEvents": events, "displayTimeUnit": "ms"})).expect("trace serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use redsea_core::decomposition::TaskId;
    use redsea_core::sim::TimelineEvent;

    use super::*;

    fn sample() -> Timeline {
        Timeline::from_events(vec![
            TimelineEvent { task: TaskId(0), resource: Resource::HostPool(0), start_s: 0.0, end_s: 0.5 },
            TimelineEvent { task: TaskId(1), resource: Resource::LinkH2D, start_s: 0.5, end_s: 0.75 },
        ])
    }

    #[test]
    fn csv_has_one_line_per_event() {
        let text = String::from_utf8(timeline_csv(&sample())).unwrap();
        assert_eq!(text, "task_id,resource,start_s,end_s\n0,host0,0,0.5\n1,h2d,0.5,0.75\n");
    }

    #[test]
    fn trace_pairs_begin_and_end_in_microseconds() {
        let v: Value = serde_json::from_str(&chrome_trace(&sample())).unwrap();
        let events = v["traceEvents"].as_array().unwrap();
        let begins: Vec<&Value> = events.iter().filter(|e| e["ph"] == "B").collect();
        let ends: Vec<&Value> = events.iter().filter(|e| e["ph"] == "E").collect();
        assert_eq!(begins.len(), 2);
        assert_eq!(ends.len(), 2);
        assert_eq!(ends[1]["ts"].as_f64(), Some(750000.0));
        assert_eq!(begins[1]["tid"], 2000);
    }
}
