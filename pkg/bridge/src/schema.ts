/** Wire payload validation; failures surface as HTTP 422. */

import { z } from "zod";

export const instanceBoxSchema = z.object({
  id: z.string().min(1),
  category: z.string().min(1),
  bbox: z.tuple([z.number().int(), z.number().int(), z.number().int(), z.number().int()]),
  depth: z.number().min(0).max(1),
  z: z.number().int(),
});

export const layoutSchema = z
  .object({
    resolution: z.number().int().min(64),
    boxes: z.array(instanceBoxSchema),
  })
  .superRefine((layout, ctx) => {
    const seen = new Set<string>();
    for (const box of layout.boxes) {
      const [x0, y0, x1, y1] = box.bbox;
      if (!(x0 < x1 && y0 < y1)) {
        ctx.addIssue({ code: "custom", message: `degenerate bbox on ${box.id}` });
      }
      if (x0 < 0 || y0 < 0 || x1 > layout.resolution - 1 || y1 > layout.resolution - 1) {
        ctx.addIssue({ code: "custom", message: `bbox outside canvas on ${box.id}` });
      }
      if (seen.has(box.id)) {
        ctx.addIssue({ code: "custom", message: `duplicate box id ${box.id}` });
      }
      seen.add(box.id);
    }
  });

export const generateRequestSchema = z.object({
  layout: layoutSchema,
  prompt_d: z.string(),
  prompt_bg: z.string(),
  seed: z.number().int(),
  steps: z.number().int().min(1).default(50),
});

export const detectRequestSchema = z.object({
  image: z.string().min(1), // base64 PNG
  categories: z.array(z.string().min(1)).min(1),
  confidence: z.number().gt(0).lt(1).default(0.3),
});

export type LayoutPayload = z.infer<typeof layoutSchema>;
export type GenerateRequest = z.infer<typeof generateRequestSchema>;
export type DetectRequest = z.infer<typeof detectRequestSchema>;
