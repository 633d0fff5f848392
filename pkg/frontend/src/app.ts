/**
 * Browser entry point: a text SQL console and a point-and-click playground
 * view over the same gateway, sharing one request pipeline.
 */

import { type UiAction } from "./actions.js";
import { GatewayClient } from "./api.js";
import { performAction, submitConsole, type FlowDeps, type FlowResult } from "./flow.js";
import { OptimisticPlayground, type Occupant } from "./optimistic.js";
import { feedbackBanner, resultTables, textTable } from "./render.js";
import type { ResponseEnvelope } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const playground = new OptimisticPlayground();
let toys: { item: number; name: string; suitable4age: string | null }[] = [];
let children: { ninu: string; name: string }[] = [];

function gatewayUrl(): string {
  return (el<HTMLInputElement>("gateway-url").value || "http://127.0.0.1:8080").trim();
}

function client(): GatewayClient {
  return new GatewayClient(gatewayUrl());
}

function deps(): FlowDeps {
  const useSigner = el<HTMLInputElement>("use-signer").checked;
  const gateway = client();
  return {
    client: gateway,
    playground,
    // what-you-see-is-what-you-sign: the exact SQL text is shown verbatim
    confirmSql: async (sql) => window.confirm(`Sign and submit this SQL?\n\n${sql}`),
    sign: useSigner ? (sql) => gateway.devSign(sql) : undefined,
  };
}

function showBanner(target: HTMLElement, envelope: ResponseEnvelope | undefined, result: FlowResult) {
  target.innerHTML = "";
  const div = document.createElement("div");
  if (!result.sent) {
    div.className = "banner neutral";
    div.textContent = "cancelled: nothing was sent";
  } else if (result.error) {
    div.className = "banner bad";
    div.textContent = `network error: ${result.error} (action reversed)`;
  } else if (envelope) {
    const banner = feedbackBanner(envelope);
    div.className = banner.ok ? "banner good" : "banner bad";
    div.textContent = banner.ok
      ? `${banner.code}: ${banner.detail}`
      : `${banner.code}: ${banner.detail}${result.reversed ? " (action reversed)" : ""}`;
  }
  target.appendChild(div);
}

function renderEnvelope(target: HTMLElement, result: FlowResult) {
  showBanner(target, result.response, result);
  if (!result.response) return;
  for (const model of resultTables(result.response)) {
    const caption = document.createElement("p");
    caption.className = "executed";
    caption.textContent = model.executedSql;
    target.appendChild(caption);
    const pre = document.createElement("pre");
    pre.textContent = textTable(model);
    target.appendChild(pre);
  }
}

async function refreshWorld() {
  const gateway = client();
  const read = async (sql: string) => {
    const body = JSON.stringify({ SQL: sql });
    return gateway.query(body);
  };
  const childEnv = await read("SELECT ninu, name FROM children;");
  children = childEnv.Results[0].Rows.map((row) => ({
    ninu: row[0].Value ?? "",
    name: row[1].Value ?? "",
  }));
  const toyEnv = await read("SELECT item, name, suitable4age FROM toychest;");
  toys = toyEnv.Results[0].Rows.map((row) => ({
    item: Number(row[0].Value),
    name: row[1].Value ?? "",
    suitable4age: row[2].Value,
  }));
  const boxEnv = await read("SELECT ninu, item, posx, posy FROM sandbox;");
  const occupants: Occupant[] = boxEnv.Results[0].Rows.map((row) => ({
    ninu: row[0].Value ?? "",
    item: row[1].Value === null ? null : Number(row[1].Value),
    posx: Number(row[2].Value),
    posy: Number(row[3].Value),
  }));
  playground.load(occupants);
  renderPlayground();
  renderPickers();
}

function renderPickers() {
  const childSelect = el<HTMLSelectElement>("pick-child");
  childSelect.innerHTML = "";
  for (const child of children) {
    const option = document.createElement("option");
    option.value = child.ninu;
    option.textContent = `${child.name} (${child.ninu})`;
    childSelect.appendChild(option);
  }
  const toySelect = el<HTMLSelectElement>("pick-toy");
  toySelect.innerHTML = "";
  for (const toy of toys) {
    const option = document.createElement("option");
    option.value = String(toy.item);
    option.textContent = `${toy.name} (age ${toy.suitable4age ?? "?"})`;
    toySelect.appendChild(option);
  }
}

function renderPlayground() {
  const box = el<HTMLDivElement>("sandbox");
  box.innerHTML = "";
  for (const occupant of playground.current().occupants) {
    const child = children.find((c) => c.ninu === occupant.ninu);
    const toy = toys.find((t) => t.item === occupant.item);
    const chip = document.createElement("div");
    chip.className = "child";
    chip.style.left = `${occupant.posx}px`;
    chip.style.top = `${occupant.posy}px`;
    chip.textContent = (child?.name ?? occupant.ninu) + (toy ? ` + ${toy.name}` : "");
    box.appendChild(chip);
  }
}

async function runGuiAction(action: UiAction) {
  const result = await performAction(action, deps());
  renderPlayground();
  renderEnvelope(el("gui-output"), result);
}

function wire() {
  el<HTMLButtonElement>("run-sql").addEventListener("click", async () => {
    const sql = el<HTMLTextAreaElement>("sql-input").value;
    const result = await submitConsole(sql, deps());
    renderEnvelope(el("console-output"), result);
  });
  el<HTMLButtonElement>("refresh").addEventListener("click", () => {
    refreshWorld().catch((error) => alert(String(error)));
  });
  const picked = () => ({
    ninu: el<HTMLSelectElement>("pick-child").value,
    item: Number(el<HTMLSelectElement>("pick-toy").value),
    posx: Number(el<HTMLInputElement>("pick-x").value || "50"),
    posy: Number(el<HTMLInputElement>("pick-y").value || "50"),
  });
  el<HTMLButtonElement>("act-place").addEventListener("click", () => {
    const p = picked();
    runGuiAction({ kind: "place-child", ninu: p.ninu, posx: p.posx, posy: p.posy });
  });
  el<HTMLButtonElement>("act-move").addEventListener("click", () => {
    const p = picked();
    runGuiAction({ kind: "move-child", ninu: p.ninu, posx: p.posx, posy: p.posy });
  });
  el<HTMLButtonElement>("act-give").addEventListener("click", () => {
    const p = picked();
    runGuiAction({ kind: "give-toy", ninu: p.ninu, item: p.item });
  });
  el<HTMLButtonElement>("act-return").addEventListener("click", () => {
    runGuiAction({ kind: "return-toy", ninu: picked().ninu });
  });
  el<HTMLButtonElement>("act-remove").addEventListener("click", () => {
    runGuiAction({ kind: "remove-child", ninu: picked().ninu });
  });
}

wire();
refreshWorld().catch(() => {
  el("gui-output").textContent =
    "gateway not reachable: set the URL above and press refresh";
});
