/** Canvas helpers for getting images into and out of the service format.
 *
 * Browser-only: everything here needs document/createElement. The service
 * speaks bare base64 PNG (no data: prefix), so these helpers strip and add
 * the prefix at the boundary.
 */

const LR_SIZE = 16;

export interface LoadedImage {
  /** Bare base64 PNG, 16x16, ready for the API. */
  base64: string;
  /** True when the source was not already 16x16 and had to be downscaled. */
  rescaled: boolean;
}

export function toDataUrl(base64Png: string): string {
  return `data:image/png;base64,${base64Png}`;
}

function canvasToBase64(canvas: HTMLCanvasElement): string {
  const url = canvas.toDataURL("image/png");
  const comma = url.indexOf(",");
  return url.slice(comma + 1);
}

/** Decode a picked file, downscaling to 16x16 when needed. */
export async function fileToLrImage(file: File): Promise<LoadedImage> {
  let bitmap: ImageBitmap;
  try {
    bitmap = await createImageBitmap(file);
  } catch {
    throw new Error(`could not decode ${file.name} as an image`);
  }
  const rescaled = bitmap.width !== LR_SIZE || bitmap.height !== LR_SIZE;
  const canvas = document.createElement("canvas");
  canvas.width = LR_SIZE;
  canvas.height = LR_SIZE;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("canvas 2d context unavailable");
  }
  ctx.imageSmoothingEnabled = true;
  ctx.imageSmoothingQuality = "high";
  ctx.drawImage(bitmap, 0, 0, LR_SIZE, LR_SIZE);
  bitmap.close();
  return { base64: canvasToBase64(canvas), rescaled };
}

/** Upscale the 16x16 input with the browser's bilinear filter, for the baseline panel. */
export async function bilinearPreview(base64Png: string, size: number): Promise<string> {
  const img = new Image();
  img.src = toDataUrl(base64Png);
  await img.decode();
  const canvas = document.createElement("canvas");
  canvas.width = size;
  canvas.height = size;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("canvas 2d context unavailable");
  }
  ctx.imageSmoothingEnabled = true;
  ctx.drawImage(img, 0, 0, size, size);
  return canvasToBase64(canvas);
}
