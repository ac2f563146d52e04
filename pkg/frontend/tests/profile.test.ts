import { beforeEach, describe, expect, it } from "vitest";

import {
  loadProfile,
  saveProfile,
  validateProfile,
} from "../src/profile";

beforeEach(() => localStorage.clear());

describe("persistence", () => {
  it("round-trips through localStorage", () => {
    const profile = { coreHost: "10.5.0.2", apiPort: 8000, bridgePort: 6080 };
    saveProfile(profile);
    expect(loadProfile()).toEqual(profile);
  });

  it("returns null when nothing is stored", () => {
    expect(loadProfile()).toBeNull();
  });

  it("rejects corrupted entries", () => {
    localStorage.setItem("droidrange.profile", "{not json");
    expect(loadProfile()).toBeNull();
    localStorage.setItem(
      "droidrange.profile",
      JSON.stringify({ coreHost: "x", apiPort: 99999, bridgePort: 1 }),
    );
    expect(loadProfile()).toBeNull();
  });
});

describe("validation", () => {
  it("accepts a complete profile", () => {
    expect(
      validateProfile({ coreHost: "core", apiPort: 8000, bridgePort: 6080 }),
    ).toBeNull();
  });

  it.each([
    [{ coreHost: "", apiPort: 8000, bridgePort: 6080 }, "core host"],
    [{ coreHost: "core", apiPort: 0, bridgePort: 6080 }, "API port"],
    [{ coreHost: "core", apiPort: 8000, bridgePort: 70000 }, "bridge port"],
  ])("rejects %j", (profile, fragment) => {
    expect(validateProfile(profile)).toContain(fragment);
  });
});
