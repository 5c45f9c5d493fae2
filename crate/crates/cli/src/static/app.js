"use strict";

const CATEGORY = ["General harassment", "Cruel statement", "Religious/racial/ethnic",
  "Sexual orientation", "Sex/gender", "Threat", "Multiple types", "Non-harassment"];

let user = null;
let current = null;
let busy = false;

const $ = (id) => document.getElementById(id);

async function call(method, path, body) {
  const res = await fetch(path, {
    method,
    headers: body ? { "content-type": "application/json" } : {},
    body: body ? JSON.stringify(body) : undefined,
  });
  const data = await res.json();
  return { status: res.status, data };
}

function banner(msg) {
  $("banner").textContent = msg || "";
  $("banner").hidden = !msg;
}

async function loadNext() {
  const { data } = await call("GET", `/api/session/${encodeURIComponent(user)}/next`);
  current = data.message_id;
  $("answer").reset();
  $("invalid").textContent = "";
  if (current === null) {
    $("answer").hidden = true;
    $("text").hidden = true;
    $("guess").textContent = "";
    $("done").hidden = false;
    return;
  }
  $("text").textContent = data.text;
  // the guess is fixed before the answer is sent
  $("guess").textContent = data.prediction === null
    ? "Your agent is still learning."
    : `Your agent would ${data.prediction ? "filter" : "keep"} this message.`;
}

async function refreshAgent() {
  const { status, data } = await call("GET", `/api/session/${encodeURIComponent(user)}/agent`);
  if (status !== 200) return;
  $("n").textContent = data.n_responses;
  $("status").textContent = data.warmed_up ? "active" : "warming up";
  $("agreement").textContent = data.agreement_rate === null ? "-" : `${Math.round(data.agreement_rate * 100)}%`;
  const bars = $("bars");
  bars.replaceChildren();
  for (const [code, rate] of Object.entries(data.per_category_filter_rate)) {
    const row = document.createElement("div");
    row.className = "bar";
    const name = document.createElement("span");
    name.textContent = CATEGORY[code] || code;
    const fill = document.createElement("div");
    fill.style.width = `${Math.round(rate * 8)}rem`;
    const pct = document.createElement("span");
    pct.textContent = `${Math.round(rate * 100)}%`;
    row.append(name, fill, pct);
    bars.append(row);
  }
}

$("login").addEventListener("submit", async (e) => {
  e.preventDefault();
  user = $("user").value.trim();
  $("main").hidden = false;
  await loadNext();
  await refreshAgent();
});

$("answer").addEventListener("submit", async (e) => {
  e.preventDefault();
  if (busy || current === null) return;
  const form = new FormData($("answer"));
  const intensity = Number(form.get("intensity"));
  const filter = form.get("filter");
  if (!intensity || filter === null) {
    $("invalid").textContent = "Choose an intensity and a filter decision.";
    return;
  }
  busy = true;
  $("submit").disabled = true;
  try {
    const { status, data } = await call("POST", `/api/session/${encodeURIComponent(user)}/response`,
      { message_id: current, intensity, filter: filter === "true" });
    banner(null);
    if (status === 400) {
      $("invalid").textContent = `${data.field}: ${data.error}`;
      return;
    }
    if (status !== 200 && status !== 409) {
      banner(data.error || `server error ${status}`);
      return;
    }
    await loadNext();
    await refreshAgent();
  } catch (err) {
    // nothing was recorded if the request never arrived; a retry is safe
    // because the server rejects a second answer to the same message
    banner("Connection problem. Press Submit to retry.");
  } finally {
    busy = false;
    $("submit").disabled = false;
  }
});
