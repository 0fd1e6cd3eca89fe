use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;

use assay_core::engine::Engine;
use assay_core::llm::Gateway;
use assay_server::api::{self, REVISION_HEADER};
use reqwest::{Method, StatusCode};
use serde_json::{json, Value};
use tokio::runtime::Runtime;

use crate::support::{ensure, helpfulness_oracle};
use crate::Outcome;

struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

struct Reply {
    status: StatusCode,
    content_type: String,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }

    fn expect(self, status: StatusCode, what: &str) -> Result<Value, String> {
        if self.status == status {
            Ok(self.json())
        } else {
            Err(format!("{what}: expected {status}, got {} {}", self.status, String::from_utf8_lossy(&self.body)))
        }
    }
}

impl Client {
    fn new(base: String) -> Self {
        Self { http: reqwest::Client::new(), base, token: None }
    }

    async fn send(&self, method: Method, path: &str, rev: Option<u64>, body: Option<Value>) -> Result<Reply, String> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        if let Some(r) = rev {
            req = req.header(REVISION_HEADER, r.to_string());
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.map_err(|e| e.to_string())?;
        let status = resp.status();
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_owned();
        let body = resp.bytes().await.map_err(|e| e.to_string())?.to_vec();
        Ok(Reply { status, content_type, body })
    }

    async fn get(&self, path: &str) -> Result<Value, String> {
        self.send(Method::GET, path, None, None).await?.expect(StatusCode::OK, path)
    }

    async fn post(&self, path: &str, rev: Option<u64>, body: Value) -> Result<Reply, String> {
        self.send(Method::POST, path, rev, Some(body)).await
    }

    async fn sign_up(&mut self, name: &str) -> Result<(), String> {
        let r = self
            .post("/api/teachers", None, json!({ "display_name": name }))
            .await?
            .expect(StatusCode::CREATED, "sign up")?;
        self.token = Some(r["session"]["token"].as_str().ok_or("no token")?.to_owned());
        Ok(())
    }
}

fn id(v: &Value) -> String {
    v["id"].as_str().unwrap_or_default().to_owned()
}

fn rev(v: &Value) -> u64 {
    v["revision"].as_u64().unwrap_or(u64::MAX)
}

fn draft(stem: &str, rubric: &str) -> Value {
    json!({
        "format": "free_response",
        "stem": stem,
        "answers": "(2x−1)(x−1)",
        "explanation_or_rubric": rubric,
        "topics": ["Factoring quadratics"],
        "skills": ["Procedural fluency"],
        "difficulty": "medium"
    })
}

/// Counters recomputed from a usage event list.
fn tally(events: &Value) -> (u64, u64, u64) {
    let mut t = (0, 0, 0);
    for e in events.as_array().into_iter().flatten() {
        match e["outcome"].as_str() {
            Some("applied") => t.0 += 1,
            Some("accepted") => t.1 += 1,
            Some("rejected") => t.2 += 1,
            _ => {}
        }
    }
    t
}

async fn walk(c: &mut Client) -> Outcome {
    c.sign_up("Ms. Rivera").await?;
    let course =
        c.post("/api/courses", None, json!({ "name": "Algebra I" })).await?.expect(StatusCode::CREATED, "course")?;
    let view = c
        .post(&format!("/api/courses/{}/assessments", id(&course)), None, json!({ "name": "Unit 3 quiz" }))
        .await?
        .expect(StatusCode::CREATED, "assessment")?;
    let aid = id(&view["assessment"]);
    let base = format!("/api/assessments/{aid}");

    let generated = c
        .post(
            &format!("{base}/generate"),
            Some(rev(&view)),
            json!({ "topics": ["Linear equations"], "counts": { "mc": 2, "fr": 2 } }),
        )
        .await?
        .expect(StatusCode::CREATED, "generate")?;
    ensure(generated["questions"].as_array().map(Vec::len) == Some(4), || format!("generated {generated}"))?;

    let added = c
        .post(
            &format!("{base}/questions"),
            Some(rev(&generated)),
            json!({ "question": draft("Factor x²−(3/2)x+1/2 completely", "Full credit for both factors.") }),
        )
        .await?
        .expect(StatusCode::CREATED, "add question")?;
    let manual = id(&added["question"]);
    let mut revision = rev(&added);

    // A stale write is refused and changes nothing.
    let stale =
        c.post(&format!("{base}/questions"), Some(revision - 1), json!({ "question": draft("Stale", "x") })).await?;
    ensure(stale.status == StatusCode::CONFLICT, || format!("stale write got {}", stale.status))?;
    ensure(stale.json()["code"] == "version_conflict", || format!("stale write body {}", stale.json()))?;
    ensure(stale.json()["details"] == json!({ "expected": revision - 1, "actual": revision }), || {
        "conflict details".into()
    })?;

    let proposal = c
        .post(
            &format!("/api/questions/{manual}/proposals"),
            None,
            json!({ "part": "explanation_or_rubric", "instruction": "add more detail" }),
        )
        .await?
        .expect(StatusCode::CREATED, "rubric proposal")?;
    let pid = id(&proposal["proposal"]);
    ensure(proposal["proposal"]["diff"]["granularity"] == "inline_word_diff", || "rubric diff granularity".into())?;
    let rejected = c
        .post(&format!("/api/proposals/{pid}/resolve"), Some(revision), json!({ "decision": "reject" }))
        .await?
        .expect(StatusCode::OK, "reject")?;
    ensure(rejected["proposal"]["state"] == "rejected" && rejected["question"]["version"] == 1, || {
        format!("reject {rejected}")
    })?;

    let fixed = c
        .send(
            Method::PUT,
            &format!("/api/questions/{manual}/parts/explanation_or_rubric"),
            Some(revision),
            Some(json!({ "value": "Full credit for (2x−1)(x−1); half credit for one correct factor." })),
        )
        .await?
        .expect(StatusCode::OK, "manual fix")?;
    ensure(fixed["changed"] == true && fixed["question"]["version"] == 2, || format!("manual fix {fixed}"))?;
    revision = rev(&fixed);

    let text = "change the fractions to integers to reduce difficulty";
    let registered = c
        .post(
            "/api/commands",
            None,
            json!({ "text": text, "scope_tags": ["stem", "answers", "explanation_or_rubric"] }),
        )
        .await?
        .expect(StatusCode::CREATED, "register command")?;
    let cid = id(&registered["command"]);

    let current = c.get(&base).await?;
    let matching: Vec<String> = current["questions"]
        .as_array()
        .into_iter()
        .flatten()
        .filter(|q| q["stem"].as_str().is_some_and(|s| s.contains("\\frac") || s.contains('/')))
        .map(id)
        .collect();
    ensure(matching.len() >= 2 && matching.contains(&manual), || format!("matching questions {matching:?}"))?;
    let applied = c
        .post(&format!("/api/commands/{cid}/apply"), None, json!({ "question_ids": matching }))
        .await?
        .expect(StatusCode::OK, "apply")?;
    let results = applied["results"].as_array().cloned().unwrap_or_default();
    ensure(results.len() == matching.len() && results.iter().all(|r| r["status"] == "proposed"), || {
        format!("apply {applied}")
    })?;

    // Accept the manual question's proposal, reject the rest.
    let mut accepted = 0;
    for r in &results {
        let accept = r["question_id"] == manual.as_str();
        let pid = id(&r["proposal"]);
        let decision = if accept { "accept" } else { "reject" };
        let out = c
            .post(&format!("/api/proposals/{pid}/resolve"), Some(revision), json!({ "decision": decision }))
            .await?
            .expect(StatusCode::OK, decision)?;
        if accept {
            accepted += 1;
            ensure(out["question"]["stem"] == "Factor 2x²−3x+1 completely", || {
                format!("accepted {}", out["question"])
            })?;
            ensure(out["question"]["version"] == 3, || "version after accept".into())?;
        }
        revision = rev(&out);
    }
    let cmd = c.get(&format!("/api/commands/{cid}")).await?;
    let n = results.len() as u64;
    let (_, _, percent) = helpfulness_oracle(accepted, n - accepted);
    ensure(cmd["uses"] == n && cmd["accepted"] == accepted && cmd["rejected"] == n - accepted, || {
        format!("metrics {cmd}")
    })?;
    ensure(cmd["helpfulness_percent"] == percent, || {
        format!("display {} vs oracle {percent}", cmd["helpfulness_percent"])
    })?;
    let usage = c.get(&format!("/api/commands/{cid}/usage")).await?;
    ensure(tally(&usage["events"]) == (n, accepted, n - accepted), || "usage log disagrees with counters".into())?;

    let history = c.get(&format!("/api/questions/{manual}/history")).await?;
    let provenance: Vec<&str> =
        history["versions"].as_array().into_iter().flatten().filter_map(|v| v["provenance"].as_str()).collect();
    ensure(provenance == ["creation", "manual", "command_apply"], || format!("provenance {provenance:?}"))?;

    let pdf = c.send(Method::GET, &format!("{base}/export?format=pdf&with_keys=true"), None, None).await?;
    ensure(pdf.status == StatusCode::OK && pdf.content_type == "application/pdf", || {
        format!("pdf export {}", pdf.status)
    })?;
    ensure(pdf.body.starts_with(b"%PDF-"), || "not a PDF".into())?;
    let text: String =
        pdf_extract::extract_text_from_mem(&pdf.body).map_err(|e| e.to_string())?.split_whitespace().collect();
    ensure(text.contains("Factor2x²−3x+1completely"), || "exported PDF lacks the accepted stem".into())?;

    let anonymous = Client::new(c.base.clone());
    let denied = anonymous.send(Method::GET, &format!("{base}/export?format=pdf"), None, None).await?;
    ensure(denied.status == StatusCode::UNAUTHORIZED, || format!("anonymous export got {}", denied.status))
}

pub fn walkthrough(rt: &Runtime) -> Outcome {
    rt.block_on(async {
        let engine = Arc::new(Engine::in_memory(Gateway::mock()));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        let server = tokio::spawn(async move { axum::serve(listener, api::router(engine)).await });
        let mut c = Client::new(format!("http://{addr}"));
        let result = walk(&mut c).await;
        server.abort();
        result
    })
}

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(journal: &std::path::Path) -> Result<Self, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_assay"))
            .args(["serve", "--bind", "127.0.0.1:0", "--journal"])
            .arg(journal)
            .env("LLM_PROVIDER", "mock")
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        let stdout = child.stdout.take().ok_or("no stdout")?;
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
        let addr = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner {line:?}"))?;
        Ok(Self { base: format!("http://{addr}"), child })
    }

    /// SIGKILL: no shutdown hooks run.
    fn kill(mut self) -> Result<(), String> {
        self.child.kill().map_err(|e| e.to_string())?;
        self.child.wait().map_err(|e| e.to_string())?;
        Ok(())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Everything a teacher can observe, with metrics recomputed from the log.
async fn snapshot(c: &Client, aid: &str) -> Result<Value, String> {
    let view = c.get(&format!("/api/assessments/{aid}")).await?;
    let mut histories = Vec::new();
    let mut proposals = Vec::new();
    for q in view["questions"].as_array().into_iter().flatten() {
        histories.push(c.get(&format!("/api/questions/{}/history", id(q))).await?);
        proposals.push(c.get(&format!("/api/questions/{}/proposals", id(q))).await?);
    }
    let commands = c.get("/api/commands").await?;
    let mut usage = Vec::new();
    for cmd in commands["commands"].as_array().into_iter().flatten() {
        let events = c.get(&format!("/api/commands/{}/usage", id(cmd))).await?;
        let (uses, accepted, rejected) = tally(&events["events"]);
        ensure(cmd["uses"] == uses && cmd["accepted"] == accepted && cmd["rejected"] == rejected, || {
            format!("stored metrics {cmd} disagree with the usage log")
        })?;
        usage.push(events);
    }
    let courses = c.get("/api/courses").await?;
    Ok(
        json!({ "view": view, "histories": histories, "proposals": proposals, "commands": commands, "usage": usage, "courses": courses }),
    )
}

async fn populate(c: &mut Client) -> Result<String, String> {
    c.sign_up("Ms. Rivera").await?;
    let course =
        c.post("/api/courses", None, json!({ "name": "Algebra I" })).await?.expect(StatusCode::CREATED, "course")?;
    let view = c
        .post(&format!("/api/courses/{}/assessments", id(&course)), None, json!({ "name": "Quiz" }))
        .await?
        .expect(StatusCode::CREATED, "assessment")?;
    let aid = id(&view["assessment"]);
    let base = format!("/api/assessments/{aid}");
    let g = c
        .post(&format!("{base}/generate"), Some(0), json!({ "topics": ["Slopes"], "counts": { "mc": 3, "fr": 1 } }))
        .await?
        .expect(StatusCode::CREATED, "generate")?;
    let q = c
        .post(
            &format!("{base}/questions"),
            Some(rev(&g)),
            json!({ "question": draft("Factor x²−(3/2)x+1/2 completely", "Both factors.") }),
        )
        .await?
        .expect(StatusCode::CREATED, "question")?;
    let qid = id(&q["question"]);
    let edited = c
        .send(
            Method::PUT,
            &format!("/api/questions/{qid}/parts/stem"),
            Some(rev(&q)),
            Some(json!({ "value": "Factor 2x²−3x+1 completely" })),
        )
        .await?
        .expect(StatusCode::OK, "manual edit")?;
    let mut revision = rev(&edited);
    let undone = c
        .post(&format!("/api/questions/{qid}/undo"), Some(revision), json!({}))
        .await?
        .expect(StatusCode::OK, "undo")?;
    revision = rev(&undone);
    let shuffled = c
        .post(&format!("{base}/shuffle"), Some(revision), json!({ "seed": 42 }))
        .await?
        .expect(StatusCode::OK, "shuffle")?;
    revision = rev(&shuffled);

    let reg = c
        .post("/api/commands", None, json!({ "text": "change the fractions to integers", "scope_tags": ["stem"] }))
        .await?
        .expect(StatusCode::CREATED, "command")?;
    let cid = id(&reg["command"]);
    let ids: Vec<String> = g["questions"].as_array().into_iter().flatten().map(id).chain([qid.clone()]).collect();
    let applied = c
        .post(&format!("/api/commands/{cid}/apply"), None, json!({ "question_ids": ids }))
        .await?
        .expect(StatusCode::OK, "apply")?;
    for (i, r) in applied["results"].as_array().into_iter().flatten().enumerate() {
        if r["status"] != "proposed" || i % 3 == 2 {
            continue;
        }
        let decision = if i % 3 == 0 { "accept" } else { "reject" };
        let out = c
            .post(
                &format!("/api/proposals/{}/resolve", id(&r["proposal"])),
                Some(revision),
                json!({ "decision": decision }),
            )
            .await?
            .expect(StatusCode::OK, decision)?;
        revision = rev(&out);
    }
    Ok(aid)
}

pub fn crash_restart(rt: &Runtime) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let journal = dir.path().join("journal.jsonl");
    rt.block_on(async {
        let first = Server::start(&journal)?;
        let mut c = Client::new(first.base.clone());
        let aid = populate(&mut c).await?;
        let before = snapshot(&c, &aid).await?;
        first.kill()?;

        let second = Server::start(&journal)?;
        c.base = second.base.clone();
        let after = snapshot(&c, &aid).await?;
        ensure(before == after, || "state differs after restart".into())?;

        // The restarted process keeps appending to the same journal.
        let revision = rev(&after["view"]);
        let extra = c
            .post(
                &format!("/api/assessments/{aid}/questions"),
                Some(revision),
                json!({ "question": draft("After restart", "x") }),
            )
            .await?
            .expect(StatusCode::CREATED, "write after restart")?;
        let expected = snapshot(&c, &aid).await?;
        second.kill()?;

        let third = Server::start(&journal)?;
        c.base = third.base.clone();
        let last = snapshot(&c, &aid).await?;
        ensure(expected == last, || "state differs after second restart".into())?;
        ensure(rev(&last["view"]) == rev(&extra), || "revision lost".into())?;
        third.kill()
    })
}
