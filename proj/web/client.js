// Browser stand-in for a headset: pointer hover is gaze, click is a pinch,
// the text box sends a final token batch as if it were recognized speech.
(() => {
  const PROTOCOL_VERSION = 1;
  let ws = null, me = null, clockOffset = 0, away = false;
  const view = CatchupView.createView();
  const $ = (id) => document.getElementById(id);

  const now = () => Math.max(0, Math.round(performance.now() + clockOffset));
  const send = (type, payload, t_ms) => {
    if (!ws || ws.readyState !== WebSocket.OPEN) return;
    const msg = { type, payload };
    if (t_ms !== undefined) msg.t_ms = t_ms;
    ws.send(JSON.stringify(msg));
  };

  let lastGaze = "";
  function gaze(target) {
    if (!me || away) return;
    const key = JSON.stringify(target);
    if (key === lastGaze) return;
    lastGaze = key;
    send("GazeUpdate", { user: me, target }, now());
  }

  function render() {
    const av = $("avatars");
    av.replaceChildren();
    for (const [id, p] of view.roster) {
      if (id === me) continue;
      const el = document.createElement("div");
      el.className = "avatar" + (p.present ? "" : " away");
      el.style.borderColor = p.color || "#555";
      el.innerHTML = `<b></b><div class="caption"></div>`;
      el.querySelector("b").textContent = p.display_name;
      el.querySelector(".caption").textContent = p.caption || "";
      el.onmouseenter = () => gaze({ kind: "avatar", id });
      av.append(el);
    }
    const pl = $("panels");
    pl.replaceChildren();
    for (const p of view.panels.values()) {
      const el = document.createElement("div");
      el.className = "panel " + p.state;
      el.style.borderLeftColor = p.color || "#555";
      el.innerHTML = `<div class="who"><span class="dot"></span><span></span></div><div class="text"></div>`;
      el.querySelector(".dot").classList.add(p.indicator);
      el.querySelector(".who span:last-child").textContent =
        (view.roster.get(p.owner)?.display_name || p.owner) + " - " + p.kind;
      el.querySelector(".text").textContent = p.text;
      el.onmouseenter = () => gaze({ kind: "panel", id: p.owner });
      pl.append(el);
    }
  }

  function handle(m) {
    const p = m.payload;
    if (m.type === "Welcome") {
      me = p.participant_id;
      clockOffset = m.t_ms - performance.now();
      $("status").textContent = `${me} in ${p.session_id} (${p.interface_mode})`;
    } else if (m.type === "Error") {
      console.warn("server:", p.code, p.message);
    }
    if (CatchupView.apply(view, m)) {
      $("mode").textContent = view.mode;
      render();
    }
  }

  $("join").onsubmit = (e) => {
    e.preventDefault();
    if (ws) ws.close();
    ws = new WebSocket(`${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`);
    ws.onopen = () => {
      $("status").textContent = "connecting";
      send("Hello", { protocol_version: PROTOCOL_VERSION, name: $("name").value, resume_id: me });
    };
    ws.onmessage = (ev) => handle(JSON.parse(ev.data));
    ws.onclose = () => { $("status").textContent = "disconnected"; };
  };

  $("say").onsubmit = (e) => {
    e.preventDefault();
    const words = $("words").value.split(/\s+/).filter(Boolean);
    if (!me || !words.length) return;
    const end = now(), per = 250;
    const start = Math.max(0, end - per * words.length);
    const tokens = words.map((word, i) => ({
      word, onset_ms: start + i * per, offset_ms: start + (i + 1) * per - 50,
    }));
    send("TimedTokenBatch", { speaker: me, final: true, tokens }, end);
    $("words").value = "";
  };

  $("away").onclick = () => {
    away = !away;
    $("away").textContent = away ? "come back" : "step away";
    if (away) send("GazeUpdate", { user: me, target: { kind: "none" } }, now());
  };
  $("table").addEventListener("mouseenter", () => gaze({ kind: "table" }));
  document.addEventListener("click", (e) => {
    if (e.target.closest("form")) return;
    if (me && !away) send("Pinch", { user: me }, now());
  });
})();
