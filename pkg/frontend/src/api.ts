/**
 * Typed client for the control API. Every request the UI makes goes
 * through this module, so the network surface stays exactly the
 * documented one.
 */

export interface HealthInfo {
  status: string;
  version: string;
  features: string[];
}

export interface DeviceInfo {
  serial: string;
  state: string;
}

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiRequestError(response.status, code, message);
}

export class ApiClient {
  constructor(readonly base: string) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await parseError(response);
    return response;
  }

  private async postJson(path: string, body: unknown): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async health(): Promise<HealthInfo> {
    return (await this.request("/health")).json();
  }

  async devices(): Promise<DeviceInfo[]> {
    return (await this.request("/devices")).json();
  }

  async sendSms(serial: string, sender: string, text: string): Promise<void> {
    await this.postJson(`/devices/${encodeURIComponent(serial)}/sms`, {
      sender,
      text,
    });
  }

  async setGeoFix(
    serial: string,
    longitude: number,
    latitude: number,
    altitude?: number,
  ): Promise<void> {
    const body: Record<string, number> = { longitude, latitude };
    if (altitude !== undefined) body.altitude = altitude;
    await this.postJson(`/devices/${encodeURIComponent(serial)}/geo`, body);
  }

  async installApk(serial: string, apk: ArrayBuffer): Promise<string> {
    const response = await this.request(
      `/devices/${encodeURIComponent(serial)}/apps`,
      {
        method: "POST",
        headers: { "content-type": "application/octet-stream" },
        body: apk,
      },
    );
    const body = (await response.json()) as { output?: string };
    return body.output ?? "";
  }

  async runShell(serial: string, command: string): Promise<string> {
    const response = await this.postJson(
      `/devices/${encodeURIComponent(serial)}/shell`,
      { command },
    );
    const body = (await response.json()) as { output: string };
    return body.output;
  }
}
