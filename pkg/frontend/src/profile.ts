/**
 * Connection profile: where the core's API and screen bridge live.
 * Persisted in localStorage so reconnecting after a reload is one click.
 */

export interface ConnectionProfile {
  coreHost: string;
  apiPort: number;
  bridgePort: number;
}

const STORAGE_KEY = "droidrange.profile";

export function isValidPort(value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= 65535;
}

export function validateProfile(profile: ConnectionProfile): string | null {
  if (!profile.coreHost.trim()) return "core host is required";
  if (!isValidPort(profile.apiPort)) return "API port must be 1-65535";
  if (!isValidPort(profile.bridgePort)) return "bridge port must be 1-65535";
  return null;
}

export function saveProfile(profile: ConnectionProfile): void {
  localStorage.setItem(STORAGE_KEY, JSON.stringify(profile));
}

export function loadProfile(): ConnectionProfile | null {
  const raw = localStorage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw) as Partial<ConnectionProfile>;
    if (
      typeof parsed.coreHost !== "string" ||
      !isValidPort(Number(parsed.apiPort)) ||
      !isValidPort(Number(parsed.bridgePort))
    ) {
      return null;
    }
    return {
      coreHost: parsed.coreHost,
      apiPort: Number(parsed.apiPort),
      bridgePort: Number(parsed.bridgePort),
    };
  } catch {
    return null;
  }
}
