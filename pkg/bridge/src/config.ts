/** Bridge configuration: model identifiers, device, and serving defaults. */

export type BridgeMode = "conformance" | "real";

export interface BridgeConfig {
  mode: BridgeMode;
  generatorModel: string;
  layoutEncoderModel: string;
  adapterModel: string;
  detectorModel: string;
  device: string;
  steps: number;
  confidence: number;
  port: number;
}

export const DEFAULTS: BridgeConfig = {
  mode: "conformance",
  generatorModel: "sdxl-base-1.0",
  layoutEncoderModel: "gligen-box-text",
  adapterModel: "ip-adapter-plus",
  detectorModel: "grounding-dino-base",
  device: "cpu",
  steps: 50,
  confidence: 0.3,
  port: 9077,
};

export function loadConfig(env: NodeJS.ProcessEnv = process.env): BridgeConfig {
  const config: BridgeConfig = {
    ...DEFAULTS,
    mode: (env.BRIDGE_MODE as BridgeMode) ?? DEFAULTS.mode,
    generatorModel: env.BRIDGE_GENERATOR ?? DEFAULTS.generatorModel,
    layoutEncoderModel: env.BRIDGE_LAYOUT_ENCODER ?? DEFAULTS.layoutEncoderModel,
    adapterModel: env.BRIDGE_ADAPTER ?? DEFAULTS.adapterModel,
    detectorModel: env.BRIDGE_DETECTOR ?? DEFAULTS.detectorModel,
    device: env.BRIDGE_DEVICE ?? DEFAULTS.device,
    steps: env.BRIDGE_STEPS ? Number(env.BRIDGE_STEPS) : DEFAULTS.steps,
    confidence: env.BRIDGE_CONFIDENCE
      ? Number(env.BRIDGE_CONFIDENCE)
      : DEFAULTS.confidence,
    port: env.BRIDGE_PORT ? Number(env.BRIDGE_PORT) : DEFAULTS.port,
  };
  validateConfig(config);
  return config;
}

export function validateConfig(config: BridgeConfig): void {
  if (!Number.isInteger(config.steps) || config.steps < 1) {
    throw new Error(`steps must be an integer >= 1, got ${config.steps}`);
  }
  if (!(config.confidence > 0 && config.confidence < 1)) {
    throw new Error(`confidence must lie in (0, 1), got ${config.confidence}`);
  }
  if (config.mode !== "conformance" && config.mode !== "real") {
    throw new Error(`unknown mode ${config.mode}`);
  }
}
