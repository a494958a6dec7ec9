#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bayeslens::jsonio {

// Minimal JSON value for emitting reports. Object keys keep insertion order
// and doubles always print with 12 significant digits ("%.12g"), so a given
// report is byte-stable run to run — nlohmann's serializer guarantees
// neither, which is why this exists.
class Value {
public:
  enum class Type { Null, Bool, Int, Double, String, Array, Object };

  Value() : type_(Type::Null) {}
  Value(bool v) : type_(Type::Bool), bool_(v) {}
  Value(int v) : type_(Type::Int), int_(v) {}
  Value(long long v) : type_(Type::Int), int_(v) {}
  Value(std::size_t v) : type_(Type::Int), int_(static_cast<long long>(v)) {}
  Value(double v) : type_(Type::Double), double_(v) {}
  Value(const char* v) : type_(Type::String), str_(v) {}
  Value(std::string v) : type_(Type::String), str_(std::move(v)) {}

  static Value array() {
    Value v;
    v.type_ = Type::Array;
    return v;
  }
  static Value object() {
    Value v;
    v.type_ = Type::Object;
    return v;
  }

  Value& push(Value v) {
    items_.push_back(std::move(v));
    return *this;
  }
  Value& set(std::string key, Value v) {
    keys_.push_back(std::move(key));
    items_.push_back(std::move(v));
    return *this;
  }

  static std::string format_double(double x) {
    if (x != x) return "null";                      // NaN has no JSON spelling
    if (x == 0.0) return "0";                       // squash negative zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
  }

  void dump(std::string& out) const {
    switch (type_) {
      case Type::Null: out += "null"; return;
      case Type::Bool: out += bool_ ? "true" : "false"; return;
      case Type::Int: out += std::to_string(int_); return;
      case Type::Double: out += format_double(double_); return;
      case Type::String: dump_string(str_, out); return;
      case Type::Array: {
        out += '[';
        for (std::size_t i = 0; i < items_.size(); ++i) {
          if (i) out += ',';
          items_[i].dump(out);
        }
        out += ']';
        return;
      }
      case Type::Object: {
        out += '{';
        for (std::size_t i = 0; i < items_.size(); ++i) {
          if (i) out += ',';
          dump_string(keys_[i], out);
          out += ':';
          items_[i].dump(out);
        }
        out += '}';
        return;
      }
    }
  }

  std::string dump() const {
    std::string out;
    dump(out);
    return out;
  }

private:
  static void dump_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
          } else {
            out += c;
          }
      }
    }
    out += '"';
  }

  Type type_;
  bool bool_ = false;
  long long int_ = 0;
  double double_ = 0.0;
  std::string str_;
  std::vector<std::string> keys_;  // Object only, parallel to items_
  std::vector<Value> items_;       // Array/Object payload
};

}  // namespace bayeslens::jsonio
