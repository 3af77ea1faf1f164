//! Commit-list pages in GitHub REST format, newest first.

use serde_json::Value;

const SLOB: [&str; 2] = [
    include_str!("../fixtures/slob/page1.json"),
    include_str!("../fixtures/slob/page2.json"),
];

const THREE_PAGE: [&str; 3] = [
    include_str!("../fixtures/three_page/page1.json"),
    include_str!("../fixtures/three_page/page2.json"),
    include_str!("../fixtures/three_page/page3.json"),
];

fn parse(pages: &[&str]) -> Vec<Vec<Value>> {
    pages
        .iter()
        .map(|p| match serde_json::from_str(p).expect("fixture parses") {
            Value::Array(items) => items,
            _ => panic!("fixture page is not an array"),
        })
        .collect()
}

/// A 146-commit history shaped like the `mm/slob.c` module.
pub fn slob_pages() -> Vec<Vec<Value>> {
    parse(&SLOB)
}

/// 217 commits over pages of 100, 100 and 17.
pub fn three_page_history() -> Vec<Vec<Value>> {
    parse(&THREE_PAGE)
}

/// Re-chunks a flat commit list into pages of `per_page`.
pub fn paginate(commits: Vec<Value>, per_page: usize) -> Vec<Vec<Value>> {
    commits.chunks(per_page.max(1)).map(<[Value]>::to_vec).collect()
}

/// Synthetic commits `sha = format!("{seed:08x}{i:032x}")`, one-sentence messages.
pub fn synthetic_commits(n: usize, seed: u32) -> Vec<Value> {
    (0..n)
        .map(|i| {
            serde_json::json!({
                "sha": format!("{seed:08x}{i:032x}"),
                "commit": {
                    "author": {"name": format!("Dev {}", i % 7), "email": format!("dev{}@example.org", i % 7), "date": format!("20{:02}-03-04T05:06:07Z", 10 + i % 10)},
                    "committer": {"name": "Maint", "email": "maint@example.org", "date": format!("20{:02}-03-04T05:06:07Z", 10 + i % 10)},
                    "message": format!("Fix issue {i}.\n\nOtherwise item {i} breaks.")
                }
            })
        })
        .collect()
}
