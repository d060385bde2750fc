/* Submit-and-iterate workflow against the grading service.
 *
 * All state on screen is derived from server responses: the result
 * panel renders what POST /attempts returned and the history panel is
 * re-fetched after every recorded attempt. The client never grades.
 *
 * One submission may be in flight at a time. The guard is set before
 * the first await, so a double click produces a single POST.
 */

import { ApiError, Client, ProviderUnavailable, RateLimited } from "./api.js";
import { clear, el } from "./dom.js";
import { renderHistory } from "./historyView.js";
import { renderResultView } from "./resultView.js";
import { renderTaskError, renderTaskView } from "./taskView.js";
import type { TaskDetail, TaskSummary } from "./types.js";

export interface AppConfig {
  baseUrl: string;
  token: string;
  studentId: string;
}

const OFFLINE_MESSAGE = "cannot reach the grading service";

export class App {
  readonly client: Client;
  private readonly studentId: string;

  private readonly taskList: HTMLElement;
  private readonly taskPane: HTMLElement;
  private readonly editor: HTMLTextAreaElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly notice: HTMLElement;
  private readonly resultPane: HTMLElement;
  private readonly historyPane: HTMLElement;

  private currentTask: TaskDetail | null = null;
  private editorAllowed = false;
  private inflight = false;
  private countdownTimer: ReturnType<typeof setInterval> | null = null;
  private active = new Set<Promise<void>>();

  constructor(root: HTMLElement, config: AppConfig) {
    this.client = new Client(config);
    this.studentId = config.studentId;

    clear(root);
    root.classList.add("pg-app");
    const header = el("header", "app-header");
    header.append(
      el("h1", "", "prompt grading"),
      el("span", "student-id", config.studentId),
    );
    const columns = el("div", "columns");
    this.taskList = el("nav", "task-list");
    const workspace = el("main", "workspace");
    this.taskPane = el("section", "task-pane");
    const editorPane = el("section", "editor-pane");
    this.editor = el("textarea", "prompt-editor");
    this.editor.placeholder = "describe the code, or write your prompt";
    this.editor.disabled = true;
    this.submitButton = el("button", "submit-button", "submit");
    this.submitButton.type = "button";
    this.submitButton.disabled = true;
    this.notice = el("div", "notice");
    this.notice.hidden = true;
    const controls = el("div", "editor-controls");
    controls.append(this.submitButton, this.notice);
    editorPane.append(this.editor, controls);
    this.resultPane = el("section", "result-pane");
    this.historyPane = el("section", "history-pane");
    workspace.append(this.taskPane, editorPane, this.resultPane, this.historyPane);
    columns.append(this.taskList, workspace);
    root.append(header, columns);

    this.submitButton.addEventListener("click", () => {
      this.launch(() => this.doSubmit());
    });
  }

  /** Resolves once every launched operation has finished. */
  async settled(): Promise<void> {
    while (this.active.size > 0) {
      await Promise.all([...this.active]);
    }
  }

  private launch(operation: () => Promise<void>): Promise<void> {
    const p = operation().finally(() => {
      this.active.delete(p);
    });
    this.active.add(p);
    return p;
  }

  async start(initialTaskId?: string): Promise<void> {
    let tasks: TaskSummary[];
    try {
      tasks = await this.client.listTasks();
    } catch {
      this.taskList.append(el("p", "task-list-error", OFFLINE_MESSAGE));
      this.notify(OFFLINE_MESSAGE, "notice-offline");
      return;
    }
    const list = el("ul");
    for (const task of tasks) {
      const item = el("li");
      const button = el("button", "task-link", `${task.title} (lab ${task.lab})`);
      button.type = "button";
      button.dataset.taskId = task.id;
      button.addEventListener("click", () => {
        this.launch(() => this.openTask(task.id));
      });
      item.append(button);
      list.append(item);
    }
    clear(this.taskList);
    this.taskList.append(list);
    const first = initialTaskId ?? tasks[0]?.id;
    if (first) await this.openTask(first);
  }

  async openTask(taskId: string): Promise<void> {
    if (this.inflight) return;
    this.currentTask = null;
    this.editorAllowed = false;
    this.updateControls();
    this.clearNotice();
    clear(this.resultPane);
    clear(this.taskPane);
    this.taskPane.append(el("p", "task-loading", "loading task..."));
    try {
      const detail = await this.client.getTask(taskId);
      renderTaskView(this.taskPane, detail);
      this.currentTask = detail;
      this.editorAllowed = true;
      this.editor.value = "";
      await this.refreshHistory();
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        renderTaskError(this.taskPane, `unknown task: ${taskId}`, { notFound: true });
      } else {
        renderTaskError(this.taskPane, OFFLINE_MESSAGE);
        this.notify(OFFLINE_MESSAGE, "notice-offline");
      }
      clear(this.historyPane);
    }
    this.updateControls();
  }

  /** Submit whatever is in the editor for the open task. */
  submit(): Promise<void> {
    return this.launch(() => this.doSubmit());
  }

  private async doSubmit(): Promise<void> {
    if (this.inflight || this.countdownTimer !== null) return;
    const task = this.currentTask;
    if (task === null || !this.editorAllowed) return;
    const prompt = this.editor.value;
    if (prompt.trim() === "") {
      this.notify("enter a prompt before submitting", "notice-validation");
      return;
    }
    this.inflight = true;
    this.updateControls();
    this.clearNotice();
    try {
      const result = await this.client.submit(this.studentId, task.id, prompt);
      renderResultView(this.resultPane, result);
      await this.refreshHistory();
    } catch (error) {
      if (error instanceof RateLimited) {
        this.startCountdown(error.retryAfterMs);
      } else if (error instanceof ProviderUnavailable) {
        this.notify("provider unavailable, attempt recorded", "notice-provider");
        await this.refreshHistory();
      } else if (error instanceof ApiError) {
        this.notify(error.detail, "notice-error");
      } else {
        this.notify(OFFLINE_MESSAGE, "notice-offline");
      }
    } finally {
      this.inflight = false;
      this.updateControls();
    }
  }

  private async refreshHistory(): Promise<void> {
    const task = this.currentTask;
    if (task === null) return;
    const entries = await this.client.history(this.studentId, task.id);
    renderHistory(this.historyPane, entries, (prompt) => {
      this.editor.value = prompt;
      this.editor.focus();
    });
  }

  private startCountdown(retryAfterMs: number): void {
    let seconds = Math.max(1, Math.ceil(retryAfterMs / 1000));
    const show = () => {
      this.notify(`rate limited, retry in ${seconds}s`, "notice-rate");
    };
    show();
    this.countdownTimer = setInterval(() => {
      seconds -= 1;
      if (seconds <= 0) {
        this.stopCountdown();
      } else {
        show();
      }
    }, 1000);
    this.updateControls();
  }

  private stopCountdown(): void {
    if (this.countdownTimer !== null) {
      clearInterval(this.countdownTimer);
      this.countdownTimer = null;
    }
    this.clearNotice();
    this.updateControls();
  }

  private updateControls(): void {
    const enabled =
      this.editorAllowed && !this.inflight && this.countdownTimer === null;
    this.editor.disabled = !enabled;
    this.submitButton.disabled = !enabled;
  }

  private notify(text: string, cls: string): void {
    this.notice.hidden = false;
    this.notice.className = `notice ${cls}`;
    this.notice.textContent = text;
  }

  private clearNotice(): void {
    this.notice.hidden = true;
    this.notice.className = "notice";
    this.notice.textContent = "";
  }
}
