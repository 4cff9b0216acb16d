/* vizgrade:probe */
// Walks the subtree under a root selector and returns a scene snapshot
// document. arguments[0] is the root selector (default "body").
var rootSel = arguments[0] || "body";
var STYLE_KEYS = ["fill", "stroke", "opacity", "display", "visibility", "font-size"];
var root = document.querySelector(rootSel);
if (!root) {
  return { error: "RootNotFound", selector: rootSel };
}
function datumOf(node) {
  if (!("__data__" in node)) return undefined;
  try {
    return JSON.parse(JSON.stringify(node.__data__));
  } catch (e) {
    return "<unserializable>";
  }
}
function ownText(node) {
  var t = "";
  for (var i = 0; i < node.childNodes.length; i++) {
    if (node.childNodes[i].nodeType === 3) t += node.childNodes[i].nodeValue;
  }
  return t;
}
function walk(node) {
  var out = { tag: node.tagName.toLowerCase(), attrs: {}, computed_style: {}, children: [] };
  for (var i = 0; i < node.attributes.length; i++) {
    out.attrs[node.attributes[i].name] = node.attributes[i].value;
  }
  var cs = window.getComputedStyle(node);
  STYLE_KEYS.forEach(function (k) {
    var v = cs.getPropertyValue(k);
    if (v !== "") out.computed_style[k] = v;
  });
  var d = datumOf(node);
  if (d !== undefined) out.datum = d;
  var r = node.getBoundingClientRect();
  out.bbox = { x: r.left + window.scrollX, y: r.top + window.scrollY, w: r.width, h: r.height };
  var text = ownText(node);
  if (text.trim() !== "") out.text = text;
  for (var j = 0; j < node.children.length; j++) out.children.push(walk(node.children[j]));
  return out;
}
return {
  version: 1,
  url: String(window.location.href),
  viewport: { width: window.innerWidth, height: window.innerHeight },
  root: walk(root)
};
