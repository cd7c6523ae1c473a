// Replays the server messages a viewer received through the client's view
// reducer and compares the overlays with the server's at every checkpoint.
//   node overlay_snapshot.js <log.jsonl> <expected.json> <viewer>
const fs = require("fs");
const path = require("path");
const { createView, apply, overlays } = require(path.join(__dirname, "../../web/overlay.js"));

const [logPath, expectedPath, viewer] = process.argv.slice(2);
const msgs = fs.readFileSync(logPath, "utf8").split("\n").filter(Boolean).map(JSON.parse)
  .filter((r) => r.kind === "out" && (r.msg.to === null || r.msg.to === viewer))
  .map((r) => r.msg);
const expected = JSON.parse(fs.readFileSync(expectedPath, "utf8"));

const view = createView();
let i = 0, checked = 0, nonEmpty = 0;
for (const cp of expected) {
  while (i < msgs.length && msgs[i].seq <= cp.seq) apply(view, msgs[i++]);
  const got = JSON.stringify(overlays(view));
  const want = JSON.stringify(cp.panels.map(({ owner, kind, indicator, state, text }) =>
    ({ owner, kind, indicator, state, text })));
  if (got !== want) {
    console.error(`mismatch after seq ${cp.seq}\n  client ${got}\n  server ${want}`);
    process.exit(1);
  }
  checked++;
  if (cp.panels.length) nonEmpty++;
}
console.log(`${path.basename(logPath)}: ${checked} checkpoints match (${nonEmpty} with panels), ${msgs.length} messages`);
