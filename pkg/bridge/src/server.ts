/**
 * HTTP surface: POST /generate (layout in, PNG out), POST /detect (PNG in,
 * counts out), GET /info (models + capability flags). Schema violations are
 * 422; real-model mode without loaded weights is 503.
 */

import express, { Express } from "express";

import { BridgeConfig } from "./config.js";
import { detectInstances } from "./detect.js";
import { decodePng, encodePng } from "./png.js";
import { renderLayout } from "./render.js";
import { detectRequestSchema, generateRequestSchema } from "./schema.js";

export function createApp(config: BridgeConfig): Express {
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.get("/info", (_req, res) => {
    res.json({
      mode: config.mode,
      models: {
        generator: config.generatorModel,
        layout_encoder: config.layoutEncoderModel,
        image_prompt_adapter: config.adapterModel,
        detector: config.detectorModel,
      },
      device: config.device,
      steps: config.steps,
      confidence: config.confidence,
      capabilities: {
        generate: true,
        detect: true,
        // real-stack refinements; the conformance path uses box masks only
        self_segmentation_masks: false,
        attention_expansion: false,
        background_inpainting: false,
      },
    });
  });

  app.post("/generate", (req, res) => {
    const parsed = generateRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(422).json({ detail: parsed.error.issues });
      return;
    }
    if (config.mode === "real") {
      res.status(503).json({ detail: "model weights are not loaded on this host" });
      return;
    }
    const rendered = renderLayout(parsed.data.layout);
    const png = encodePng(rendered.pixels, rendered.resolution, rendered.resolution);
    res.status(200).type("image/png").send(png);
  });

  app.post("/detect", (req, res) => {
    const parsed = detectRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(422).json({ detail: parsed.error.issues });
      return;
    }
    if (config.mode === "real") {
      res.status(503).json({ detail: "detector weights are not loaded on this host" });
      return;
    }
    let image;
    try {
      image = decodePng(Buffer.from(parsed.data.image, "base64"));
    } catch (err) {
      res.status(422).json({ detail: `image is not a decodable PNG: ${err}` });
      return;
    }
    const detection = detectInstances(
      image.pixels, image.width, image.height, parsed.data.categories,
    );
    res.json(detection);
  });

  return app;
}
