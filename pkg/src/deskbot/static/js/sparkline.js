// One sparkline per sensor from its recent filtered values.
export function sparklinePath(values, width, height, pad = 2) {
    if (values.length === 0)
        return "";
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const span = hi - lo || 1;
    const innerW = width - 2 * pad;
    const innerH = height - 2 * pad;
    const stepX = values.length > 1 ? innerW / (values.length - 1) : 0;
    return values
        .map((v, i) => {
        const x = pad + i * stepX;
        const y = pad + innerH * (1 - (v - lo) / span);
        return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    })
        .join("");
}
export function sparklineLabel(id, values) {
    if (values.length === 0)
        return `${id}: --`;
    return `${id}: ${values[values.length - 1].toFixed(2)}`;
}
