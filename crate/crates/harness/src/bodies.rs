// Canned error pages, modelled on what each framework prints with verbose
// errors enabled.

const ASP: &str = r##"<!DOCTYPE html>
<html>
    <head>
        <title>Object reference not set to an instance of an object.</title>
    </head>
    <body bgcolor="white">
            <span><H1>Server Error in '/' Application.<hr width=100% size=1 color=silver></H1>
            <h2> <i>Object reference not set to an instance of an object.</i> </h2></span>
            <b> Description: </b>An unhandled exception occurred during the execution of the current web request.
            <br><br>
            <b> Exception Details: </b>System.NullReferenceException: Object reference not set to an instance of an object.<br><br>
            <b>Stack Trace:</b> <br><br>
            <table width=100% bgcolor="#ffffcc">
               <tr>
                  <td>
                      <code><pre>
[NullReferenceException: Object reference not set to an instance of an object.]
   Api.Controllers.UserController.Get(Int32 id) in C:\inetpub\api\Controllers\UserController.cs:42
   System.Web.Mvc.ActionMethodDispatcher.Execute(ControllerBase controller, Object[] parameters) +14
   System.Web.HttpApplication.ExecuteStep(IExecutionStep step, Boolean&amp; completedSynchronously) +155
</pre></code>
                  </td>
               </tr>
            </table>
            <hr width=100% size=1 color=silver>
            <b>Version Information:</b>&nbsp;Microsoft .NET Framework Version:4.0.30319; ASP.NET Version:4.7.3535.0
    </body>
</html>
"##;

const CHERRYPY: &str = r##"<!DOCTYPE html PUBLIC "-//W3C//DTD XHTML 1.0 Transitional//EN" "http://www.w3.org/TR/xhtml1/DTD/xhtml1-transitional.dtd">
<html>
<head>
    <meta http-equiv="Content-Type" content="text/html; charset=utf-8"></meta>
    <title>500 Internal Server Error</title>
</head>
    <body>
        <h2>500 Internal Server Error</h2>
        <p>The server encountered an unexpected condition which prevented it from fulfilling the request.</p>
        <pre id="traceback">Traceback (most recent call last):
  File "/usr/lib/python3/dist-packages/cherrypy/_cprequest.py", line 670, in respond
    response.body = self.handler()
  File "/usr/lib/python3/dist-packages/cherrypy/lib/encoding.py", line 220, in __call__
    self.body = self.oldhandler(*args, **kwargs)
  File "/srv/app/api.py", line 31, in index
    return rows[0]
IndexError: list index out of range
</pre>
    <div id="powered_by">
      <span>
        Powered by <a href="http://www.cherrypy.org">CherryPy 8.9.1</a>
      </span>
    </div>
    </body>
</html>
"##;

const JAVA: &str = r##"<html><head><title>HTTP Status 500 - Internal Server Error</title></head><body>
<h1>HTTP Status 500 - Internal Server Error</h1>
<p><b>Exception</b></p>
<pre>javax.servlet.ServletException: java.lang.NullPointerException
	org.apache.jasper.servlet.JspServlet.service(JspServlet.java:339)
	javax.servlet.http.HttpServlet.service(HttpServlet.java:729)
</pre>
<p><b>Root Cause</b></p>
<pre>java.lang.NullPointerException
	at com.example.api.UserResource.find(UserResource.java:57)
	at sun.reflect.NativeMethodAccessorImpl.invoke0(Native Method)
	at org.apache.catalina.core.ApplicationFilterChain.doFilter(ApplicationFilterChain.java:166)
</pre>
</body></html>
"##;

const NODEJS: &str = r##"<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Error</title>
</head>
<body>
<pre>TypeError: Cannot read property &#39;id&#39; of undefined<br> &nbsp; &nbsp;at /srv/api/routes/users.js:24:31<br> &nbsp; &nbsp;at Layer.handle [as handle_request] (/srv/api/node_modules/express/lib/router/layer.js:95:5)<br> &nbsp; &nbsp;at next (/srv/api/node_modules/express/lib/router/route.js:137:13)<br> &nbsp; &nbsp;at Route.dispatch (/srv/api/node_modules/express/lib/router/route.js:112:3)</pre>
</body>
</html>
"##;

const PHP: &str = r##"<br />
<b>Fatal error</b>:  Uncaught Error: Call to a member function fetch() on boolean in /var/www/html/api/v1/items.php:18
Stack trace:
#0 /var/www/html/api/index.php(44): require()
#1 {main}
  thrown in <b>/var/www/html/api/v1/items.php</b> on line <b>18</b><br />
"##;

const PYTHON: &str = r##"Traceback (most recent call last):
  File "/srv/app/server.py", line 88, in handle
    result = dispatch(request)
  File "/srv/app/server.py", line 52, in dispatch
    return HANDLERS[request.path](request)
KeyError: '/v2/items'
"##;

/// The canned error page for `framework`, or an empty string for an unknown
/// name.
pub fn stack_trace_body(framework: &str) -> &'static str {
    match framework {
        "asp" => ASP,
        "cherrypy" => CHERRYPY,
        "java" => JAVA,
        "nodejs" => NODEJS,
        "php" => PHP,
        "python" => PYTHON,
        _ => "",
    }
}
