import init, {
  listSentences,
  disassembleSentence,
  disassembleConllu,
  deriveTree,
  checkDirection,
} from "./pkg/sentasm_web.js";

const $ = (id) => document.getElementById(id);

function show(el, fn) {
  try {
    el.classList.remove("err");
    fn();
  } catch (e) {
    el.classList.add("err");
    el.textContent = String(e.message ?? e);
  }
}

function renderTemplate(json) {
  const t = JSON.parse(json);
  const slots = t.slots.map((s) => `  [${s.slot}] ${s.kind.padEnd(6)} weight ${s.attention_weight}  "${s.text}"`);
  const flag = t.degenerate ? `\ndegenerate: ${t.degenerate}` : "";
  $("template").textContent =
    `seed:     ${t.text}\ntemplate: ${t.template}\nbase:     ${t.base}${flag}\nslots:\n${slots.join("\n") || "  (none)"}`;
}

function renderTree(json) {
  const view = JSON.parse(json);
  const box = $("tree");
  box.replaceChildren();
  view.levels.forEach((level, i) => {
    const row = document.createElement("div");
    row.className = "level";
    row.append(`S${i} (${level.length}): `);
    for (const node of level) {
      const span = document.createElement("span");
      span.title = `${node.id}  score ${node.score.toFixed(3)}`;
      span.textContent = node.text;
      row.append(span);
    }
    box.append(row);
  });
  const sa = view.sa_tests.map((t) => `  + "${t.adjunct_text}": ${t.parent_text}  ->  ${t.child_text}`);
  const ssm = view.ssm_pairs.map(([a, b]) => `  ${a}  <>  ${b}`);
  $("tests").textContent =
    `SA edges (${sa.length}):\n${sa.join("\n")}\n\nSSM pairs (${ssm.length}):\n${ssm.join("\n")}`;
}

async function main() {
  await init();
  const select = $("sentence");
  for (const s of JSON.parse(listSentences())) {
    const opt = document.createElement("option");
    opt.value = s.id;
    opt.textContent = `${s.id}: ${s.text}`;
    select.append(opt);
  }
  select.value = "p2s1";

  $("disassemble").onclick = () => show($("template"), () => renderTemplate(disassembleSentence(select.value)));
  $("disassemble-pasted").onclick = () =>
    show($("template"), () => renderTemplate(disassembleConllu($("conllu").value, $("labels").value)));
  $("derive").onclick = () =>
    show($("tests"), () => renderTree(deriveTree(select.value, Number($("beam").value) || 0)));
  $("check").onclick = () =>
    show($("verdict"), () => {
      const v = JSON.parse(
        checkDirection(
          Number($("p-adjunct").value),
          Number($("p-parent").value),
          Number($("p-child").value),
          Number($("threshold").value),
        ),
      );
      const verdict = v.violation ? '<span class="bad">violation</span>' : '<span class="ok">no violation</span>';
      $("verdict").innerHTML =
        `adjunct reads ${v.adjunct_label}; watching ${v.watched}\n` +
        `increase ${v.delta.toFixed(3)}: ${verdict}`;
    });

  $("disassemble").click();
}

main();
