/**
 * Workspace assembly: connect form, status banner, live screen,
 * device selector, and the feature panels.
 *
 * The screen session and the API are deliberately independent: the
 * bridge can stream a framebuffer while the API is down (panels stay
 * disabled), and vice versa.
 */

import { ApiClient, ApiRequestError } from "./api";
import { FeaturePanels } from "./panels";
import {
  ConnectionProfile,
  loadProfile,
  saveProfile,
  validateProfile,
} from "./profile";
import { CanvasSurface, ScreenView, Surface } from "./screen";

export interface WorkspaceOptions {
  /** override the paint surface (tests run without a real 2D context) */
  surfaceFactory?(canvas: HTMLCanvasElement): Surface;
  onFrame?(): void;
}

export class Workspace {
  private api: ApiClient | null = null;
  private screen: ScreenView | null = null;
  private panels: FeaturePanels;
  private serialValue = "emulator-5554";

  private banner: HTMLElement;
  private canvas: HTMLCanvasElement;
  private screenStatus: HTMLElement;
  private serialSelect: HTMLSelectElement;
  private form: HTMLFormElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly options: WorkspaceOptions = {},
  ) {
    root.innerHTML = `
      <header>
        <h1>droidrange</h1>
        <form id="connect-form">
          <input id="core-host" placeholder="core host" aria-label="core host">
          <input id="api-port" placeholder="API port" aria-label="API port" inputmode="numeric">
          <input id="bridge-port" placeholder="bridge port" aria-label="bridge port" inputmode="numeric">
          <button type="submit">connect</button>
        </form>
        <div id="banner" hidden></div>
      </header>
      <main>
        <section id="screen-section">
          <div id="screen-status">not connected</div>
          <canvas id="screen-canvas" tabindex="0"></canvas>
        </section>
        <aside id="control-section">
          <label for="device-select">device</label>
          <select id="device-select"></select>
        </aside>
      </main>
    `;
    this.banner = root.querySelector("#banner")!;
    this.canvas = root.querySelector("#screen-canvas")!;
    this.screenStatus = root.querySelector("#screen-status")!;
    this.serialSelect = root.querySelector("#device-select")!;
    this.form = root.querySelector("#connect-form")!;

    this.panels = new FeaturePanels({
      api: () => this.api,
      serial: () => this.serialValue,
    });
    root.querySelector("#control-section")!.appendChild(this.panels.root);

    this.serialSelect.addEventListener("change", () => {
      this.serialValue = this.serialSelect.value;
    });

    const saved = loadProfile();
    if (saved) this.fillForm(saved);

    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      const profile = this.readForm();
      const problem = validateProfile(profile);
      if (problem) {
        this.showBanner(`invalid profile: ${problem}`, true);
        return;
      }
      void this.connect(profile);
    });
  }

  get serial(): string {
    return this.serialValue;
  }

  fillForm(profile: ConnectionProfile): void {
    (this.root.querySelector("#core-host") as HTMLInputElement).value =
      profile.coreHost;
    (this.root.querySelector("#api-port") as HTMLInputElement).value = String(
      profile.apiPort,
    );
    (this.root.querySelector("#bridge-port") as HTMLInputElement).value =
      String(profile.bridgePort);
  }

  readForm(): ConnectionProfile {
    return {
      coreHost: (this.root.querySelector("#core-host") as HTMLInputElement)
        .value,
      apiPort: Number(
        (this.root.querySelector("#api-port") as HTMLInputElement).value,
      ),
      bridgePort: Number(
        (this.root.querySelector("#bridge-port") as HTMLInputElement).value,
      ),
    };
  }

  /** Connect both halves: control API (panels) and screen bridge. */
  async connect(profile: ConnectionProfile): Promise<void> {
    saveProfile(profile);
    this.connectScreen(profile);
    await this.connectApi(profile);
  }

  private async connectApi(profile: ConnectionProfile): Promise<void> {
    this.api = new ApiClient(`http://${profile.coreHost}:${profile.apiPort}`);
    try {
      const health = await this.api.health();
      this.showBanner(
        `connected: version ${health.version}, features ${health.features.join(", ") || "none"}`,
        false,
      );
      this.panels.applyFeatures(health.features);
      await this.refreshDevices(health.features);
    } catch (err) {
      this.api = null;
      this.panels.applyFeatures(null);
      const message =
        err instanceof ApiRequestError
          ? `${err.code}: ${err.message}`
          : "control API unreachable";
      this.showBanner(message, true);
    }
  }

  private async refreshDevices(features: string[]): Promise<void> {
    this.serialSelect.innerHTML = "";
    if (!features.includes("F03") || !this.api) return;
    try {
      const devices = await this.api.devices();
      for (const device of devices) {
        const option = document.createElement("option");
        option.value = device.serial;
        option.textContent = `${device.serial} (${device.state})`;
        this.serialSelect.appendChild(option);
      }
      if (devices.length) this.serialValue = devices[0].serial;
    } catch {
      // device listing is best-effort; panels still work with the default
    }
  }

  private connectScreen(profile: ConnectionProfile): void {
    this.screen?.disconnect();
    const surface = this.options.surfaceFactory
      ? this.options.surfaceFactory(this.canvas)
      : new CanvasSurface(this.canvas);
    this.screen = new ScreenView(
      `ws://${profile.coreHost}:${profile.bridgePort}/vnc`,
      surface,
      {
        onState: (state) => {
          switch (state.kind) {
            case "connecting":
              this.screenStatus.textContent = "screen: connecting";
              break;
            case "connected":
              this.screenStatus.textContent = `screen: ${state.width}x${state.height} (${state.name})`;
              break;
            case "disconnected":
              this.screenStatus.textContent = `screen: disconnected (${state.code}) - reconnect?`;
              break;
            case "error":
              this.screenStatus.textContent = `screen: ${state.message}`;
              break;
          }
        },
        onFrame: this.options.onFrame,
      },
    );
    this.screen.attachInput(this.canvas);
    this.screen.connect();
  }

  get screenView(): ScreenView | null {
    return this.screen;
  }

  private showBanner(message: string, isError: boolean): void {
    this.banner.hidden = false;
    this.banner.textContent = message;
    this.banner.classList.toggle("error", isError);
  }
}
