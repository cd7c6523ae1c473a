// Client view state, rebuilt only from server messages. The page renders it;
// tests/web/overlay_snapshot.js replays recorded logs through it under node.
(function (root) {
  function createView() {
    return { me: null, session: null, iface: null, mode: "Engagement", roster: new Map(), panels: new Map() };
  }

  // Applies one server message; returns true when anything visible changed.
  function apply(view, m) {
    const p = m.payload || {};
    switch (m.type) {
      case "Welcome":
        view.me = p.participant_id;
        view.session = p.session_id;
        view.iface = p.interface_mode;
        view.roster.clear();
        for (const r of p.roster || []) view.roster.set(r.id, { ...r, present: r.connected });
        view.panels.clear();
        for (const x of p.panels || []) view.panels.set(x.panel_id, x);
        return true;
      case "PresenceEvent": {
        const r = view.roster.get(p.user) || { id: p.user, display_name: p.user };
        if (p.kind === "Join") Object.assign(r, { display_name: p.display_name, color: p.color, agent: p.agent });
        r.present = p.kind !== "Dropout";
        view.roster.set(p.user, r);
        return true;
      }
      case "UtteranceFinal": {
        const r = view.roster.get(p.speaker);
        if (r) r.caption = p.text;
        return !!r;
      }
      case "PanelShow":
      case "PanelUpdate":
        view.panels.set(p.panel.panel_id, p.panel);
        return true;
      case "PanelHide":
        return view.panels.delete(p.panel_id);
      case "ModeChange":
        view.mode = p.mode;
        return true;
      default:
        return false;
    }
  }

  // What is drawn over the avatars, in a stable order.
  function overlays(view) {
    return [...view.panels.values()]
      .map((p) => ({ owner: p.owner, kind: p.kind, indicator: p.indicator, state: p.state, text: p.text }))
      .sort((a, b) => (a.owner < b.owner ? -1 : a.owner > b.owner ? 1 : 0));
  }

  const api = { createView, apply, overlays };
  if (typeof module !== "undefined" && module.exports) module.exports = api;
  else root.CatchupView = api;
})(this);
