/**
 * Feature panels: SMS injection, GPS fix, APK install, shell console.
 * Each submit maps to exactly one control-API endpoint; responses and
 * errors are rendered verbatim next to the form.
 */

import { ApiClient, ApiRequestError } from "./api";

export interface PanelContext {
  api(): ApiClient | null;
  serial(): string;
}

interface Panel {
  root: HTMLElement;
  feature: string;
}

// feature identifier -> panel factory; gating mirrors /health
const PANEL_FEATURES = {
  sms: "F01",
  shell: "F03",
  gps: "F04",
  apk: "F05",
} as const;

export class FeaturePanels {
  readonly root: HTMLElement;
  private panels: Panel[] = [];

  constructor(private readonly context: PanelContext) {
    this.root = el("div", { class: "panels" });
    this.panels = [
      this.smsPanel(),
      this.gpsPanel(),
      this.apkPanel(),
      this.shellPanel(),
    ];
    for (const panel of this.panels) this.root.appendChild(panel.root);
    this.applyFeatures(null);
  }

  /** Show the panels whose feature is enabled; null hides all. */
  applyFeatures(features: string[] | null): void {
    for (const panel of this.panels) {
      panel.root.hidden = !features || !features.includes(panel.feature);
    }
  }

  private smsPanel(): Panel {
    const sender = input("sms-sender", "sender number", "5551234");
    const text = input("sms-text", "message text");
    const result = resultBox("sms-result");
    const root = section("panel-sms", "SMS", [sender, text], result, async () => {
      await this.context.api()!.sendSms(
        this.context.serial(),
        sender.value,
        text.value,
      );
      return "sent";
    });
    return { root, feature: PANEL_FEATURES.sms };
  }

  private gpsPanel(): Panel {
    const longitude = input("gps-longitude", "longitude", "-122.084");
    const latitude = input("gps-latitude", "latitude", "37.422");
    const altitude = input("gps-altitude", "altitude (optional)");
    const result = resultBox("gps-result");
    const root = section(
      "panel-gps",
      "GPS fix",
      [longitude, latitude, altitude],
      result,
      async () => {
        await this.context.api()!.setGeoFix(
          this.context.serial(),
          Number(longitude.value),
          Number(latitude.value),
          altitude.value ? Number(altitude.value) : undefined,
        );
        return "fix applied";
      },
    );
    return { root, feature: PANEL_FEATURES.gps };
  }

  private apkPanel(): Panel {
    const file = el("input", {
      type: "file",
      id: "apk-file",
      accept: ".apk",
    }) as HTMLInputElement;
    const result = resultBox("apk-result");
    const root = section("panel-apk", "Install APK", [file], result, async () => {
      const chosen = file.files?.[0];
      if (!chosen) throw new Error("choose an .apk file first");
      const bytes = await chosen.arrayBuffer();
      return await this.context.api()!.installApk(this.context.serial(), bytes);
    });
    return { root, feature: PANEL_FEATURES.apk };
  }

  private shellPanel(): Panel {
    const command = input("shell-command", "command", "echo hi");
    const result = resultBox("shell-output");
    const root = section("panel-shell", "Shell", [command], result, async () => {
      return await this.context.api()!.runShell(
        this.context.serial(),
        command.value,
      );
    });
    return { root, feature: PANEL_FEATURES.shell };
  }
}

// -- tiny DOM helpers ----------------------------------------------------------

function el(
  tag: string,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) node.textContent = text;
  return node;
}

function input(id: string, label: string, value = ""): HTMLInputElement {
  const node = el("input", {
    id,
    placeholder: label,
    "aria-label": label,
  }) as HTMLInputElement;
  node.value = value;
  return node;
}

function resultBox(id: string): HTMLElement {
  return el("pre", { id, class: "result", hidden: "" });
}

function section(
  id: string,
  title: string,
  fields: HTMLElement[],
  result: HTMLElement,
  submit: () => Promise<string>,
): HTMLElement {
  const root = el("section", { id, class: "panel" });
  root.appendChild(el("h3", {}, title));
  const form = el("form");
  for (const field of fields) form.appendChild(field);
  const button = el("button", { type: "submit" }, "send") as HTMLButtonElement;
  form.appendChild(button);
  root.appendChild(form);
  root.appendChild(result);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    result.hidden = false;
    result.classList.remove("error");
    result.textContent = "...";
    button.disabled = true;
    submit()
      .then((message) => {
        result.textContent = message;
      })
      .catch((err: unknown) => {
        result.classList.add("error");
        result.textContent =
          err instanceof ApiRequestError
            ? `${err.code}: ${err.message}`
            : String(err);
      })
      .finally(() => {
        button.disabled = false;
      });
  });
  return root;
}
