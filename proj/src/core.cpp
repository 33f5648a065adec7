#include "reggio/core.hpp"

#include <stdexcept>

namespace reggio {

const char* cap_name(Cap k) {
  switch (k) {
    case Cap::Iso: return "iso";
    case Cap::Var: return "var";
    case Cap::Mut: return "mut";
    case Cap::Tmp: return "tmp";
    case Cap::Paused: return "paused";
    case Cap::Imm: return "imm";
  }
  return "?";
}

std::optional<Cap> cap_from_name(const std::string& s) {
  for (Cap k : kAllCaps)
    if (s == cap_name(k)) return k;
  return std::nullopt;
}

bool open(Cap k) { return k == Cap::Mut || k == Cap::Tmp || k == Cap::Var || k == Cap::Paused; }

std::optional<Cap> vpa(Cap outer, Cap inner) {
  using C = Cap;
  switch (outer) {
    case C::Imm:
      return C::Imm;
    case C::Iso:
      return std::nullopt;
    case C::Mut:
      if (inner == C::Mut) return C::Mut;
      if (inner == C::Imm) return C::Imm;
      return std::nullopt;
    case C::Tmp:
      switch (inner) {
        case C::Mut: return C::Mut;
        case C::Tmp: return C::Tmp;
        case C::Imm: return C::Imm;
        case C::Paused: return C::Paused;
        default: return std::nullopt;
      }
    case C::Var:
      switch (inner) {
        case C::Mut: return C::Mut;
        case C::Tmp: return C::Tmp;
        case C::Imm: return C::Imm;
        case C::Paused: return C::Paused;
        case C::Var: return C::Var;
        default: return std::nullopt;
      }
    case C::Paused:
      if (inner == C::Iso) return std::nullopt;
      if (inner == C::Imm) return C::Imm;
      return C::Paused;
  }
  return std::nullopt;
}

TypeP leaf(Cap k, std::string cls) {
  auto t = std::make_shared<Type>();
  t->cap = k;
  t->cls = std::move(cls);
  return t;
}

TypeP cell(Cap k, TypeP param) {
  auto t = std::make_shared<Type>();
  t->cap = k;
  t->cls = kCell;
  t->param = std::move(param);
  return t;
}

TypeP join(TypeP a, TypeP b) {
  if (!a) return b;
  if (!b) return a;
  if (same(a, b)) return a;
  auto t = std::make_shared<Type>();
  t->is_union = true;
  t->left = std::move(a);
  t->right = std::move(b);
  return t;
}

TypeP union_of(const std::vector<TypeP>& ts) {
  TypeP r;
  for (auto& t : ts) r = join(r, t);
  return r;
}

bool same(const TypeP& a, const TypeP& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->is_union != b->is_union) return false;
  if (a->is_union) return same(a->left, b->left) && same(a->right, b->right);
  if (a->cap != b->cap || a->cls != b->cls) return false;
  if (!a->param && !b->param) return true;
  return same(a->param, b->param);
}

std::string show(const TypeP& t) {
  if (!t) return "undef";
  if (t->is_union) {
    std::string r = show(t->right);
    if (t->right->is_union) r = "(" + r + ")";
    return show(t->left) + " | " + r;
  }
  std::string s = std::string(cap_name(t->cap)) + " " + t->cls;
  if (t->param) s += "[" + show(t->param) + "]";
  return s;
}

void leaves(const TypeP& t, std::vector<const Type*>& out) {
  if (t->is_union) {
    leaves(t->left, out);
    leaves(t->right, out);
  } else {
    out.push_back(t.get());
  }
}

std::vector<const Type*> leaves(const TypeP& t) {
  std::vector<const Type*> out;
  leaves(t, out);
  return out;
}

static bool in(std::initializer_list<Cap> ks, Cap k) {
  for (Cap x : ks)
    if (x == k) return true;
  return false;
}

bool cap(std::initializer_list<Cap> ks, const TypeP& t) {
  for (auto* l : leaves(t))
    if (!in(ks, l->cap)) return false;
  return true;
}

bool cap_not(std::initializer_list<Cap> ks, const TypeP& t) {
  for (auto* l : leaves(t))
    if (in(ks, l->cap)) return false;
  return true;
}

bool is_open_type(const TypeP& t) {
  for (auto* l : leaves(t))
    if (!open(l->cap)) return false;
  return true;
}

bool classtype(const TypeP& t) {
  for (auto* l : leaves(t))
    if (l->is_cell()) return false;
  return true;
}

static bool leaf_sub(const Type& a, const Type& b) {
  if (a.cap != b.cap || a.cls != b.cls) return false;
  if (a.param || b.param) return a.param && b.param && equiv(a.param, b.param);
  return true;
}

static bool leaf_sub_type(const Type& a, const TypeP& b) {
  if (b->is_union) return leaf_sub_type(a, b->left) || leaf_sub_type(a, b->right);
  return leaf_sub(a, *b);
}

bool subtype(const TypeP& a, const TypeP& b) {
  if (a->is_union) return subtype(a->left, b) && subtype(a->right, b);
  return leaf_sub_type(*a, b);
}

bool equiv(const TypeP& a, const TypeP& b) { return subtype(a, b) && subtype(b, a); }

TypeP with_cap(const TypeP& t, Cap from, Cap to) {
  if (t->is_union) return join(with_cap(t->left, from, to), with_cap(t->right, from, to));
  if (t->cap != from) return t;
  auto r = std::make_shared<Type>(*t);
  r->cap = to;
  return r;
}

TypeP make_iso(const TypeP& t) { return with_cap(t, Cap::Mut, Cap::Iso); }
TypeP make_mut(const TypeP& t) { return with_cap(t, Cap::Iso, Cap::Mut); }
TypeP make_imm(const TypeP& t) { return with_cap(t, Cap::Iso, Cap::Imm); }

TypeP make_cell(const TypeP& t) {
  if (t->is_union) return join(make_cell(t->left), make_cell(t->right));
  return cell(Cap::Var, t);
}

TypeP adapt(Cap k, const TypeP& t) {
  if (t->is_union) {
    auto l = adapt(k, t->left);
    auto r = adapt(k, t->right);
    if (!l || !r) return nullptr;
    return join(l, r);
  }
  auto c = vpa(k, t->cap);
  if (!c) return nullptr;
  if (*c == t->cap) return t;
  auto r = std::make_shared<Type>(*t);
  r->cap = *c;
  return r;
}

ClassTable::ClassTable() { add(ClassDecl{kUnit, {}}); }

void ClassTable::add(ClassDecl c) {
  if (c.name == kCell) throw std::invalid_argument("Cell is built in");
  if (!classes_.count(c.name)) order_.push_back(c.name);
  classes_[c.name] = std::move(c);
}

bool ClassTable::has(const std::string& name) const { return classes_.count(name) > 0; }

const ClassDecl* ClassTable::find(const std::string& name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : &it->second;
}

TypeP ClassTable::ftype(const Type& l, const std::string& f) const {
  if (l.is_cell()) return f == kVal ? l.param : nullptr;
  auto* c = find(l.cls);
  if (!c) return nullptr;
  for (auto& fd : c->fields)
    if (fd.name == f) return fd.type;
  return nullptr;
}

std::vector<std::string> ClassTable::field_names(const std::string& cls) const {
  if (cls == kCell) return {kVal};
  std::vector<std::string> r;
  if (auto* c = find(cls))
    for (auto& fd : c->fields) r.push_back(fd.name);
  return r;
}

std::string ClassTable::wf_error(const TypeP& t) const {
  if (!t) return "missing type";
  if (t->is_union) {
    auto e = wf_error(t->left);
    return e.empty() ? wf_error(t->right) : e;
  }
  if (t->cls == kCell) {
    if (!t->param) return "Cell needs a parameter";
    return wf_error(t->param);
  }
  if (t->param) return "only Cell takes a parameter";
  if (!has(t->cls)) return "unknown class " + t->cls;
  return "";
}

TypeP fresult(const ClassTable& ct, const TypeP& t, const std::string& f) {
  if (t->is_union) {
    auto l = fresult(ct, t->left, f);
    auto r = fresult(ct, t->right, f);
    if (!l || !r) return nullptr;
    return join(l, r);
  }
  auto ft = ct.ftype(*t, f);
  if (!ft) return nullptr;
  return adapt(t->cap, ft);
}

TypeP ftype_union(const ClassTable& ct, const TypeP& t, const std::string& f) {
  TypeP r;
  for (auto* l : leaves(t)) {
    auto ft = ct.ftype(*l, f);
    if (!ft) return nullptr;
    r = join(r, ft);
  }
  return r;
}

}  // namespace reggio
