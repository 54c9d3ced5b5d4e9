// HTML renderers: pure functions from data to markup strings.
//
// Keeping these free of DOM access makes the role-gating rules testable as
// plain string assertions. Interactive elements carry data-action/data-id
// attributes; the app wires them up after injection.

import type { BoardColumns, ClientState } from "./reducer.js";
import type {
  Account,
  ActivityItem,
  DashboardSummary,
  PriorityBreakdown,
  Task,
  WorkloadRow,
} from "./types.js";
import { PRIORITY_COLORS, STATUSES, STATUS_LABELS } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const esc = escapeHtml;

export type Section = "tasks" | "dashboard" | "trash" | "team";

const NAV: Array<{ section: Section; label: string }> = [
  { section: "tasks", label: "Tasks" },
  { section: "dashboard", label: "Dashboard" },
  { section: "trash", label: "Trash" },
  { section: "team", label: "Team" },
];

export function renderShell(state: ClientState, active: Section, content: string): string {
  const links = NAV.map(
    ({ section, label }) =>
      `<a href="#/${section}" class="nav-link${section === active ? " active" : ""}">${label}</a>`,
  ).join("");
  const who = state.me
    ? `<button class="account-chip" data-action="open-me">${esc(state.me.name)}</button>`
    : "";
  return `
<header class="topbar">
  <span class="brand">wms</span>
  <nav>${links}</nav>
  <span class="conn conn-${state.connection}" title="connection">${state.connection}</span>
  ${who}
</header>
<main id="content">${content}</main>
<div id="notice"></div>`;
}

export function renderLogin(error?: string): string {
  return `
<form class="login" data-action="login">
  <h1>Sign in</h1>
  ${error ? `<p class="error">${esc(error)}</p>` : ""}
  <label>Email <input name="email" type="email" required></label>
  <label>Password <input name="password" type="password" required></label>
  <button type="submit">Sign in</button>
</form>`;
}

function assigneeNames(task: Task, users: Account[]): string {
  if (task.assignee_ids.length === 0) return "unassigned";
  return task.assignee_ids
    .map((id) => users.find((u) => u.id === id)?.name ?? "(unknown)")
    .join(", ");
}

export function renderCard(task: Task, users: Account[]): string {
  const color = PRIORITY_COLORS[task.priority];
  const due = task.due_date ? `<span class="due">due ${task.due_date}</span>` : "";
  const clip = task.asset_refs.length > 0 ? `<span class="clip">📎${task.asset_refs.length}</span>` : "";
  return `
<article class="card" draggable="true" data-task-id="${task.id}" data-revision="${task.revision}"
         style="border-left-color:${color}">
  <h3 data-action="open-task" data-id="${task.id}">${esc(task.title)}</h3>
  <p class="meta">
    <span class="prio" style="color:${color}">${task.priority}</span>
    <span class="who">${esc(assigneeNames(task, users))}</span>
    ${due}${clip}
  </p>
</article>`;
}

export function renderBoard(columns: BoardColumns, users: Account[]): string {
  const cols = STATUSES.map((status) => {
    const cards = columns[status].map((t) => renderCard(t, users)).join("");
    return `
<section class="column" data-status="${status}">
  <h2>${STATUS_LABELS[status]} <span class="count">${columns[status].length}</span></h2>
  <div class="cards">${cards}</div>
</section>`;
  }).join("");
  return `
<div class="board-actions">
  <form data-action="create-task" class="inline-create">
    <input name="title" placeholder="New task title" required>
    <select name="priority">
      <option value="medium" selected>medium</option>
      <option value="high">high</option>
      <option value="low">low</option>
    </select>
    <button type="submit">Add</button>
  </form>
</div>
<div class="board">${cols}</div>`;
}

export function renderTaskDetail(task: Task, users: Account[], assetUrl: (id: string) => string): string {
  const assets = task.asset_refs
    .map(
      (a) =>
        `<li><a href="${assetUrl(a.id)}" download="${esc(a.filename)}">${esc(a.filename)}</a>
         <span class="dim">${a.size_bytes} bytes</span></li>`,
    )
    .join("");
  const activity = task.activity
    .slice()
    .reverse()
    .map(
      (e) =>
        `<li><time>${e.at}</time> <b>${e.kind}</b> ${esc(e.detail)}
         <span class="dim">by ${esc(users.find((u) => u.id === e.actor_id)?.name ?? e.actor_id)}</span></li>`,
    )
    .join("");
  return `
<div class="detail" data-task-id="${task.id}" data-revision="${task.revision}">
  <button data-action="close-detail" class="close">×</button>
  <h2>${esc(task.title)}</h2>
  <p class="meta">
    <span class="prio" style="color:${PRIORITY_COLORS[task.priority]}">${task.priority}</span>
    · ${STATUS_LABELS[task.status]} · rev ${task.revision}
    ${task.due_date ? `· due ${task.due_date}` : ""}
  </p>
  <p>${esc(task.description) || "<i>no description</i>"}</p>
  <p class="who">Assigned: ${esc(assigneeNames(task, users))}</p>
  <h4>Attachments</h4>
  <ul class="assets">${assets || "<li class='dim'>none</li>"}</ul>
  <form data-action="upload-asset"><input type="file" name="file"><button type="submit">Upload</button></form>
  <h4>Activity</h4>
  <ul class="activity">${activity}</ul>
  <button data-action="trash-task" data-id="${task.id}" class="danger">Move to trash</button>
</div>`;
}

// --- dashboard ----------------------------------------------------------

export function renderSummaryCards(s: DashboardSummary): string {
  const pct = Math.round(s.completion_ratio * 100);
  const cards: Array<[string, string]> = [
    ["Total tasks", String(s.total_tasks)],
    ["To Do", String(s.todo_count)],
    ["In Progress", String(s.in_progress_count)],
    ["Done", String(s.done_count)],
    ["Completion", `${pct}%`],
  ];
  return `<div class="cards-row">${cards
    .map(([label, value]) => `<div class="stat"><b>${value}</b><span>${label}</span></div>`)
    .join("")}</div>`;
}

export function renderWorkloadChart(rows: WorkloadRow[]): string {
  const max = Math.max(1, ...rows.map((r) => r.total));
  const width = 360;
  const bars = rows
    .map((r, i) => {
      const y = i * 28;
      const segs = [
        { n: r.todo_count, color: "#90A4AE" },
        { n: r.in_progress_count, color: "#42A5F5" },
        { n: r.done_count, color: "#66BB6A" },
      ];
      let x = 130;
      const rects = segs
        .map((seg) => {
          const w = (seg.n / max) * (width - 170);
          const rect = `<rect x="${x.toFixed(1)}" y="${y + 6}" width="${w.toFixed(1)}" height="16" fill="${seg.color}"/>`;
          x += w;
          return seg.n > 0 ? rect : "";
        })
        .join("");
      return `<g>
  <text x="124" y="${y + 19}" text-anchor="end">${esc(r.assignee_name)}</text>
  ${rects}
  <text x="${(x + 6).toFixed(1)}" y="${y + 19}">${r.total}</text>
</g>`;
    })
    .join("");
  const height = Math.max(28, rows.length * 28);
  return `<svg class="workload" viewBox="0 0 ${width} ${height}" role="img" aria-label="tasks per assignee">${bars}</svg>`;
}

export function renderPriorityDonut(p: PriorityBreakdown): string {
  const total = p.high_count + p.medium_count + p.low_count;
  const slices: Array<[number, string, string]> = [
    [p.high_count, PRIORITY_COLORS.high, "high"],
    [p.medium_count, PRIORITY_COLORS.medium, "medium"],
    [p.low_count, PRIORITY_COLORS.low, "low"],
  ];
  let offset = 25; // start at 12 o'clock
  const rings = slices
    .map(([count, color, label]) => {
      if (total === 0 || count === 0) return "";
      const share = (count / total) * 100;
      const ring = `<circle r="15.9" cx="21" cy="21" fill="none" stroke="${color}" stroke-width="8"
        pathLength="100" stroke-dasharray="${share.toFixed(3)} ${(100 - share).toFixed(3)}"
        stroke-dashoffset="${offset.toFixed(3)}"><title>${label}: ${count}</title></circle>`;
      offset -= share;
      return ring;
    })
    .join("");
  const legend = slices
    .map(([count, color, label]) => `<li><i style="background:${color}"></i>${label}: ${count}</li>`)
    .join("");
  return `
<div class="donut-wrap">
  <svg class="donut" viewBox="0 0 42 42" role="img" aria-label="tasks by priority">${rings}
    <text x="21" y="23" text-anchor="middle">${total}</text>
  </svg>
  <ul class="legend">${legend}</ul>
</div>`;
}

export function renderActivityFeed(items: ActivityItem[]): string {
  const rows = items
    .map(
      (i) =>
        `<li><time>${i.at}</time> <b>${i.kind}</b> ${esc(i.detail)}
         <span class="dim">on ${esc(i.task_title)}</span></li>`,
    )
    .join("");
  return `<ul class="feed">${rows || "<li class='dim'>no activity yet</li>"}</ul>`;
}

export function renderDashboard(
  summary: DashboardSummary,
  workload: WorkloadRow[],
  priority: PriorityBreakdown,
  activity: ActivityItem[],
): string {
  return `
<div class="dashboard">
  ${renderSummaryCards(summary)}
  <div class="panels">
    <section><h2>Workload</h2>${renderWorkloadChart(workload)}</section>
    <section><h2>Priorities</h2>${renderPriorityDonut(priority)}</section>
  </div>
  <section><h2>Recent activity</h2>${renderActivityFeed(activity)}</section>
</div>`;
}

// --- trash and team -----------------------------------------------------

export function renderTrash(tasks: Task[], users: Account[], isAdmin: boolean): string {
  const rows = tasks
    .map((t) => {
      const purge = isAdmin
        ? `<button data-action="purge" data-id="${t.id}" class="danger">Delete forever</button>`
        : "";
      return `
<li class="trash-row" data-task-id="${t.id}">
  <span>${esc(t.title)}</span>
  <span class="dim">${esc(assigneeNames(t, users))}</span>
  <button data-action="restore" data-id="${t.id}">Restore</button>
  ${purge}
</li>`;
    })
    .join("");
  return `<ul class="trash">${rows || "<li class='dim'>trash is empty</li>"}</ul>`;
}

export function renderTeam(users: Account[], me: Account): string {
  const isAdmin = me.role === "admin";
  const rows = users
    .map((u) => {
      const controls =
        isAdmin && u.id !== me.id
          ? `<td>
<select data-action="set-role" data-id="${u.id}">
  <option value="user"${u.role === "user" ? " selected" : ""}>user</option>
  <option value="admin"${u.role === "admin" ? " selected" : ""}>admin</option>
</select>
<button data-action="set-active" data-id="${u.id}" data-active="${u.active ? "false" : "true"}">
  ${u.active ? "Deactivate" : "Reactivate"}
</button></td>`
          : isAdmin
            ? "<td><span class='dim'>you</span></td>"
            : "";
      return `
<tr class="${u.active ? "" : "inactive"}">
  <td>${esc(u.name)}</td><td>${esc(u.email)}</td><td>${u.role}</td>
  <td>${u.active ? "active" : "inactive"}</td>${controls}
</tr>`;
    })
    .join("");
  const addForm = isAdmin
    ? `
<form data-action="add-member" class="add-member">
  <h3>Add member</h3>
  <input name="name" placeholder="Name" required>
  <input name="email" type="email" placeholder="Email" required>
  <input name="password" type="password" placeholder="Password" required>
  <select name="role"><option value="user" selected>user</option><option value="admin">admin</option></select>
  <button type="submit">Create account</button>
</form>`
    : "";
  const controlHeader = isAdmin ? "<th></th>" : "";
  return `
<table class="team">
  <thead><tr><th>Name</th><th>Email</th><th>Role</th><th>Status</th>${controlHeader}</tr></thead>
  <tbody>${rows}</tbody>
</table>
${addForm}`;
}

export function renderMe(me: Account): string {
  return `
<div class="me-panel">
  <button data-action="close-me" class="close">×</button>
  <h2>${esc(me.name)}</h2>
  <p>${esc(me.email)}</p>
  <p>role: <b>${me.role}</b></p>
  <button data-action="logout">Sign out</button>
</div>`;
}

export function renderNotice(message: string, kind: "error" | "info" = "error"): string {
  return `<div class="toast toast-${kind}">${esc(message)}</div>`;
}
